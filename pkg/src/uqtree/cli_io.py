"""Command-line driver and file formats.

Formats (all versioned):
  uqtree-model v1    JSON; tabular tables or n-gram training data, contexts
                     and tokens written as rendered token strings.
  uqtree-trace v1    JSON lines; a vocabulary header line, then one record
                     per line with fields tokens / steps / meta, logprobs in
                     natural log.
  uqtree-spec v1     line-oriented `key = value` analysis spec.
  uqtree-result v1   line-oriented result document; everything above the
                     `---` marker is deterministic for a fixed spec + seed.
  uqtree-sim v1      similarity matrix with an index of rendered sequences.

Cluster files are plain lines of rendered tokens followed by a cluster id.

Exit codes: 0 success, 2 parse/usage errors, 3 domain errors (positivity,
coverage, estimator starvation, off-trace queries, trace conflicts),
4 internal invariant breaches.
"""

from __future__ import annotations

import argparse
import datetime
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .filter_algebra import (
    CompositeFilter,
    EosYFilter,
    EosZFilter,
    Filter,
    FixedLengthFilter,
    PrefixFilter,
    PromptSetFilter,
    SingleTokenFilter,
    SuffixFilter,
    TrivialFilter,
    composite,
    make_mc_filter,
    make_prob_mass_filter,
    make_topk_filter,
)
from .fixtures import FIXTURE_SUMMARY, fixture
from .lm_backend import (
    DistributionError,
    NgramModel,
    OffTraceError,
    SeqModel,
    TabularModel,
    TraceConflictError,
    TraceRecord,
    load_trace_model,
)
from .objective_engine import (
    DegenerateWeightingError,
    EstimatorStarvationError,
    HardClusterObjective,
    SoftClusterObjective,
    jaccard_similarity,
    lcs_ratio,
    similarity_from_matrix,
)
from .sampling_tree import EnumerationBudget, SamplingTree, dump_snapshot
from .seq_core import SequenceStructureError, TokenSeq, Vocabulary, VocabularyError
from .uncertainty_metrics import (
    InsufficientCoverageError,
    RecipeResult,
    recipe_prompt_sensitivity,
    recipe_self_consistency,
    recipe_semantic_entropy,
    recipe_sequence_probability,
    recipe_similarity_entropy,
    subtree_entropy,
)

log = logging.getLogger("uqtree")

MODEL_FORMAT = "uqtree-model v1"
TRACE_FORMAT = "uqtree-trace v1"
SPEC_FORMAT = "uqtree-spec v1"
RESULT_FORMAT = "uqtree-result v1"
SIM_FORMAT = "uqtree-sim v1"

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_DOMAIN = 3
EXIT_INTERNAL = 4

DOMAIN_ERRORS = (
    DegenerateWeightingError,
    EstimatorStarvationError,
    InsufficientCoverageError,
    OffTraceError,
    TraceConflictError,
    VocabularyError,
    SequenceStructureError,
    DistributionError,
    LookupError,
)


class CliParseError(ValueError):
    """A spec file, model file, or expression failed to parse."""


def _fmt(x: float) -> str:
    return f"{x:.12g}"


# --- Model files ---------------------------------------------------------------


def _vocab_from_json(obj: dict) -> Vocabulary:
    size = int(obj["size"])
    display = {int(k): str(v) for k, v in obj.get("display", {}).items()}
    if {"eos_x", "eos_y", "eos_z"} <= obj.keys():
        table = tuple(sorted(display.items()))
        return Vocabulary(
            size=size,
            eos_x=int(obj["eos_x"]),
            eos_y=int(obj["eos_y"]),
            eos_z=int(obj["eos_z"]),
            display=table,
        )
    return Vocabulary.basic(size, display=display or None)


def load_model_file(path: str | Path) -> SeqModel:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CliParseError(f"{path}: invalid JSON ({exc})") from exc
    if data.get("format") != MODEL_FORMAT:
        raise CliParseError(f"{path}: expected format {MODEL_FORMAT!r}")
    try:
        vocab = _vocab_from_json(data["vocab"])
        kind = data["kind"]
        temperature = float(data.get("temperature", 1.0))
        if kind == "tabular":
            table = {}
            for ctx_text, row in data["table"].items():
                ctx = TokenSeq.from_render(vocab, ctx_text)
                table[ctx.tokens] = {
                    vocab.parse_token(tok): float(p) for tok, p in row.items()
                }
            default = None
            if data.get("default"):
                default = {
                    vocab.parse_token(tok): float(p)
                    for tok, p in data["default"].items()
                }
            return TabularModel(
                vocab, table, default=default, temperature=temperature,
                name=str(path),
            )
        if kind == "ngram":
            training = [
                TokenSeq.from_render(vocab, line).tokens for line in data["training"]
            ]
            return NgramModel(
                vocab,
                order=int(data["order"]),
                training=training,
                lam=float(data.get("lambda", 0.1)),
                temperature=temperature,
            )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (VocabularyError, SequenceStructureError)):
            raise
        raise CliParseError(f"{path}: {exc}") from exc
    raise CliParseError(f"{path}: unknown model kind {data.get('kind')!r}")


def resolve_model(source: str, base_dir: Path) -> SeqModel:
    if source.startswith("fixture:"):
        name = source[len("fixture:") :]
        try:
            return fixture(name)
        except KeyError as exc:
            raise CliParseError(str(exc)) from exc
    return load_model_file(base_dir / source)


# --- Trace files ---------------------------------------------------------------


def read_trace_file(path: str | Path) -> tuple[list[TraceRecord], Vocabulary]:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise CliParseError(f"{path}: empty trace file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CliParseError(f"{path}:1: invalid JSON header ({exc})") from exc
    if header.get("format") != TRACE_FORMAT:
        raise CliParseError(f"{path}: expected format {TRACE_FORMAT!r}")
    vocab = _vocab_from_json(header["vocab"])
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            steps = tuple(
                tuple((int(c["token_id"]), float(c["logprob"])) for c in step)
                for step in obj["steps"]
            )
            meta = tuple(sorted((str(k), str(v)) for k, v in obj.get("meta", {}).items()))
            records.append(
                TraceRecord(tokens=tuple(int(t) for t in obj["tokens"]), steps=steps, meta=meta)
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CliParseError(f"{path}:{lineno}: bad trace record ({exc})") from exc
    if not records:
        raise CliParseError(f"{path}: no trace records after the header")
    return records, vocab


def ingest_trace(
    path: str | Path, smoothing: float = 0.0, strict: bool = True
) -> tuple[SeqModel, dict]:
    """Build a replay model from a trace file and report what was loaded."""
    records, vocab = read_trace_file(path)
    try:
        model = load_trace_model(records, smoothing, vocab, strict=strict)
    except TraceConflictError as exc:
        lines = [i + 2 for i in getattr(exc, "records", ())]
        raise TraceConflictError(f"{exc} (file lines {lines})") from exc
    seen = {t for rec in records for step in rec.steps for t, _ in step}
    report = {
        "records": len(records),
        "traced_prefixes": len(model.traced_prefixes()),
        "vocab_coverage": len(seen & set(vocab.extended)) / len(vocab.extended),
        "strict": strict,
        "smoothing": smoothing,
    }
    return model, report


# --- Cluster and similarity files ----------------------------------------------


def load_cluster_file(path: str | Path, vocab: Vocabulary) -> HardClusterObjective:
    """Lines of rendered tokens followed by a cluster id (last field)."""
    table: dict[TokenSeq, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) < 2:
            raise CliParseError(f"{path}:{lineno}: need tokens and a cluster id")
        seq = TokenSeq.from_render(vocab, " ".join(parts[:-1]))
        table[seq] = parts[-1]
    if not table:
        raise CliParseError(f"{path}: no cluster assignments")
    return HardClusterObjective.from_mapping(table, name=f"clusters:{path}")


def load_similarity_file(path: str | Path, vocab: Vocabulary) -> SoftClusterObjective:
    lines = [l for l in Path(path).read_text().splitlines()]
    if not lines or lines[0].strip() != SIM_FORMAT:
        raise CliParseError(f"{path}: expected format {SIM_FORMAT!r}")
    try:
        n = int(lines[1])
        seqs = [TokenSeq.from_render(vocab, lines[2 + i]) for i in range(n)]
        matrix = [
            [float(x) for x in lines[2 + n + i].split()] for i in range(n)
        ]
    except (IndexError, ValueError) as exc:
        raise CliParseError(f"{path}: malformed similarity file ({exc})") from exc
    sim = similarity_from_matrix(seqs, matrix)
    return SoftClusterObjective(sim=sim, name=f"similarity:{path}")


# --- Filter expressions ----------------------------------------------------------


def _split_call(text: str) -> tuple[str, Optional[str]]:
    text = text.strip()
    if "(" not in text:
        return text, None
    name, rest = text.split("(", 1)
    if not rest.endswith(")"):
        raise CliParseError(f"unbalanced parentheses in {text!r}")
    return name.strip(), rest[:-1]


def _split_args(text: str) -> list[str]:
    args, depth, current = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            args.append("".join(current).strip())
            current = []
        else:
            current.append(ch)
    tail = "".join(current).strip()
    if tail:
        args.append(tail)
    return args


def parse_filter(text: str, vocab: Vocabulary, model: SeqModel) -> Filter:
    """Parse the filter mini-language, e.g.
    ``composite(prefix(</X> heads), eos_y)`` or ``top_k(3)``."""
    name, arg = _split_call(text)
    if name == "trivial":
        return TrivialFilter()
    if name == "eos_y":
        return EosYFilter()
    if name == "eos_z":
        return EosZFilter()
    if name == "fixed_length":
        return FixedLengthFilter(int(_require_arg(name, arg)))
    if name == "prefix":
        return PrefixFilter(TokenSeq.from_render(vocab, _require_arg(name, arg)))
    if name == "suffix":
        return SuffixFilter(TokenSeq.from_render(vocab, _require_arg(name, arg)))
    if name == "single_token":
        return SingleTokenFilter(TokenSeq.from_render(vocab, _require_arg(name, arg)))
    if name == "prompt_set":
        prompts = tuple(
            TokenSeq.from_render(vocab, part.strip())
            for part in _require_arg(name, arg).split("|")
        )
        return PromptSetFilter(prompts)
    if name == "composite":
        parts = [parse_filter(a, vocab, model) for a in _split_args(_require_arg(name, arg))]
        return CompositeFilter(parts=tuple(parts))
    if name == "top_k":
        return make_topk_filter(model, int(_require_arg(name, arg)))
    if name == "prob_mass":
        return make_prob_mass_filter(model, float(_require_arg(name, arg)))
    raise CliParseError(f"unknown filter {name!r}")


def _require_arg(name: str, arg: Optional[str]) -> str:
    if arg is None or not arg.strip():
        raise CliParseError(f"filter {name!r} needs an argument")
    return arg


def parse_estimator(
    text: str,
    model: SeqModel,
    context: TokenSeq,
    stop: Filter,
    default_seed: int,
    max_len: int,
) -> tuple[Optional[Filter], str]:
    """Estimator expression -> (filter or None for exact, canonical echo)."""
    name, arg = _split_call(text)
    if name == "exact":
        return None, "exact"
    if name == "top_k":
        k = int(_require_arg(name, arg))
        return make_topk_filter(model, k), f"top_k({k})"
    if name == "prob_mass":
        pm = float(_require_arg(name, arg))
        return make_prob_mass_filter(model, pm), f"prob_mass({_fmt(pm)})"
    if name == "mc":
        params = {"seed": default_seed}
        for part in _split_args(_require_arg(name, arg)):
            if "=" not in part:
                raise CliParseError(f"mc argument {part!r} is not key=value")
            key, value = (s.strip() for s in part.split("=", 1))
            if key not in ("r", "seed"):
                raise CliParseError(f"unknown mc parameter {key!r}")
            params[key] = int(value)
        if "r" not in params:
            raise CliParseError("mc estimator needs r=<samples>")
        f, _ = make_mc_filter(
            model, context, stop, r=params["r"], seed=params["seed"], max_len=max_len
        )
        return f, f"mc(r={params['r']}, seed={params['seed']})"
    raise CliParseError(f"unknown estimator {name!r}")


# --- Analysis specs --------------------------------------------------------------


_SPEC_DEFAULTS = {
    "estimator": "exact",
    "stop": "eos_y",
    "units": "nats",
    "seed": "0",
    "max_depth": "16",
    "max_nodes": "1000000",
    "min_path_prob": "0",
    "coverage_floor": "0.999",
}


@dataclass
class AnalysisSpec:
    recipe: str
    model: str
    values: dict[str, str]
    prompts: tuple[str, ...]
    base_dir: Path

    def get(self, key: str) -> str:
        return self.values.get(key, _SPEC_DEFAULTS.get(key, ""))

    def budget(self) -> EnumerationBudget:
        return EnumerationBudget(
            max_depth=int(self.get("max_depth")),
            max_nodes=int(self.get("max_nodes")),
            min_path_prob=float(self.get("min_path_prob")),
        )


def parse_analysis_spec(path: str | Path) -> AnalysisSpec:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != SPEC_FORMAT:
        raise CliParseError(f"{path}: first line must be {SPEC_FORMAT!r}")
    values: dict[str, str] = {}
    prompts: list[str] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliParseError(f"{path}:{lineno}: expected key = value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "prompt":
            prompts.append(value)
        else:
            values[key] = value
    if "recipe" not in values:
        raise CliParseError(f"{path}: missing required key 'recipe'")
    if "model" not in values:
        raise CliParseError(f"{path}: missing required key 'model'")
    return AnalysisSpec(
        recipe=values["recipe"],
        model=values["model"],
        values=values,
        prompts=tuple(prompts),
        base_dir=Path(path).resolve().parent,
    )


def _parse_stop(text: str, vocab: Vocabulary, model: SeqModel) -> Filter:
    if text.startswith("length:"):
        return FixedLengthFilter(int(text[len("length:") :]))
    return parse_filter(text, vocab, model)


def _load_objective(spec: AnalysisSpec, vocab: Vocabulary):
    clusters = spec.values.get("clusters")
    similarity = spec.values.get("similarity")
    if clusters is not None:
        if clusters == "identity":
            return HardClusterObjective.identity()
        if clusters.startswith("file:"):
            return load_cluster_file(spec.base_dir / clusters[len("file:") :], vocab)
        raise CliParseError(f"clusters must be 'identity' or 'file:PATH', got {clusters!r}")
    if similarity is not None:
        if similarity == "jaccard":
            return SoftClusterObjective(sim=jaccard_similarity, name="jaccard")
        if similarity == "lcs":
            return SoftClusterObjective(sim=lcs_ratio, name="lcs")
        if similarity.startswith("file:"):
            return load_similarity_file(spec.base_dir / similarity[len("file:") :], vocab)
        raise CliParseError(
            f"similarity must be 'jaccard', 'lcs', or 'file:PATH', got {similarity!r}"
        )
    return None


def run_analysis(
    spec: AnalysisSpec, out_path: Optional[str] = None, seed_override: Optional[int] = None
) -> tuple[int, list[str]]:
    """Execute a parsed analysis spec; returns (exit status, result lines)
    and writes the result file when a path is configured."""
    model = resolve_model(spec.model, spec.base_dir)
    vocab = model.vocab
    seed = seed_override if seed_override is not None else int(spec.get("seed"))
    units = spec.get("units")
    budget = spec.budget()
    prompts = tuple(TokenSeq.from_render(vocab, p) for p in spec.prompts)
    prompt = prompts[0] if prompts else TokenSeq(vocab)

    echo: list[tuple[str, str]] = [("recipe", spec.recipe), ("model", spec.model)]
    for p in spec.prompts:
        echo.append(("prompt", p))
    for key in ("clusters", "similarity"):
        if key in spec.values:
            echo.append((key, spec.values[key]))

    body: list[str] = []
    estimator_echo = "exact"
    result: Optional[RecipeResult] = None

    if spec.recipe in ("semantic_entropy", "similarity_entropy"):
        objective = _load_objective(spec, vocab)
        stop = composite(PrefixFilter(prompt), EosYFilter())
        estimator, estimator_echo = parse_estimator(
            spec.get("estimator"), model, prompt, stop, seed, budget.max_depth * 4
        )
        if spec.recipe == "semantic_entropy":
            if not isinstance(objective, HardClusterObjective):
                raise CliParseError("semantic_entropy requires a 'clusters' source")
            result = recipe_semantic_entropy(
                model, prompt, objective, estimator, budget, units
            )
        else:
            if not isinstance(objective, SoftClusterObjective):
                raise CliParseError("similarity_entropy requires a 'similarity' source")
            result = recipe_similarity_entropy(
                model, prompt, objective, estimator, budget, units
            )
    elif spec.recipe in ("self_consistency", "prompt_sensitivity"):
        if not prompts:
            raise CliParseError(f"{spec.recipe} needs at least one 'prompt' line")
        root = TokenSeq(vocab)
        estimator, estimator_echo = parse_estimator(
            spec.get("estimator"), model, root, EosYFilter(), seed, budget.max_depth * 4
        )
        objective = _load_objective(spec, vocab)
        if spec.recipe == "self_consistency":
            if not isinstance(objective, HardClusterObjective):
                raise CliParseError("self_consistency requires a 'clusters' source")
            result = recipe_self_consistency(
                model, prompts, objective, estimator, budget, units
            )
        else:
            result = recipe_prompt_sensitivity(
                model, prompts, objective, estimator, budget, units
            )
    elif spec.recipe == "sequence_probability":
        if "sequence" not in spec.values:
            raise CliParseError("sequence_probability needs a 'sequence' key")
        sequence = TokenSeq.from_render(vocab, spec.values["sequence"])
        context = TokenSeq.from_render(vocab, spec.values.get("context", ""))
        result = recipe_sequence_probability(model, sequence, context)
        echo.append(("sequence", spec.values["sequence"]))
        if spec.values.get("context"):
            echo.append(("context", spec.values["context"]))
    elif spec.recipe == "subtree_entropy":
        context = TokenSeq.from_render(vocab, spec.values.get("context", ""))
        stop = _parse_stop(spec.get("stop"), vocab, model)
        report = subtree_entropy(
            SamplingTree(model),
            context,
            stop,
            budget,
            units=units,
            coverage_floor=float(spec.get("coverage_floor")),
        )
        echo.append(("stop", spec.get("stop")))
        if spec.values.get("context"):
            echo.append(("context", spec.values["context"]))
        body = _entropy_lines(report)
    else:
        raise CliParseError(f"unknown recipe {spec.recipe!r}")

    echo.extend(
        [
            ("estimator", estimator_echo),
            ("max_depth", str(budget.max_depth)),
            ("max_nodes", str(budget.max_nodes)),
            ("min_path_prob", _fmt(budget.min_path_prob)),
            ("seed", str(seed)),
            ("units", units),
        ]
    )

    if result is not None:
        body = _result_lines(result)

    lines = [RESULT_FORMAT]
    lines += [f"{k} = {v}" for k, v in echo]
    lines += body
    lines.append("---")
    lines.append(f"generated_at = {datetime.datetime.now().isoformat()}")

    target = out_path or spec.values.get("out")
    if target:
        _atomic_write(spec.base_dir / target if not os.path.isabs(target) else Path(target),
                      "\n".join(lines) + "\n")
    return EXIT_OK, lines


def _entropy_lines(report) -> list[str]:
    lines = [
        f"entropy = {_fmt(report.value)}",
        f"entropy_units = {report.units}",
        f"entropy_kind = {report.kind}",
    ]
    if report.coverage is not None:
        lines.append(f"coverage = {_fmt(report.coverage)}")
    lines.append(f"truncated = {str(report.truncated).lower()}")
    return lines


def _result_lines(result: RecipeResult) -> list[str]:
    lines = [f"inputs_digest = {result.inputs_digest}"]
    if result.entropy is not None:
        lines += _entropy_lines(result.entropy)
    if result.distribution is not None:
        for label, weight in result.distribution:
            lines.append(f"category = {label} :: {_fmt(weight)}")
    for key, value in result.diagnostics:
        if key == "probability":
            lines.append(f"probability = {_fmt(value)}")
        elif key == "log_probability":
            lines.append(f"log_probability = {_fmt(value)}")
        elif key == "support_size":
            lines.append(f"support_size = {value}")
        elif key == "per_step":
            for token, p in value:
                lines.append(f"step = {token} :: {_fmt(p)}")
        elif key == "per_prompt":
            for rendered, dist in value:
                for label, weight in dist:
                    lines.append(f"conditional = {rendered} :: {label} :: {_fmt(weight)}")
        elif key == "per_prompt_entropy":
            for rendered, h in value:
                lines.append(f"prompt_entropy = {rendered} :: {_fmt(h)}")
    return lines


def _atomic_write(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(content)
    os.replace(tmp, path)


# --- Entry point -----------------------------------------------------------------


def _cmd_run(args: argparse.Namespace) -> int:
    spec = parse_analysis_spec(args.spec)
    status, lines = run_analysis(spec, out_path=args.out, seed_override=args.seed)
    if not (args.out or spec.values.get("out")):
        print("\n".join(lines))
    return status


def _cmd_ingest(args: argparse.Namespace) -> int:
    model, report = ingest_trace(args.trace, smoothing=args.smoothing, strict=args.strict)
    for key in ("records", "traced_prefixes", "vocab_coverage", "strict", "smoothing"):
        value = report[key]
        text = _fmt(value) if isinstance(value, float) else str(value).lower()
        print(f"{key} = {text}")
    return EXIT_OK


def _cmd_dump_tree(args: argparse.Namespace) -> int:
    model = resolve_model(args.model, Path.cwd())
    tree = SamplingTree(model)
    context = TokenSeq.from_render(model.vocab, args.context) if args.context else None
    snapshot = dump_snapshot(tree, args.depth, context=context)
    if args.out:
        _atomic_write(Path(args.out), snapshot)
    else:
        print(snapshot, end="")
    return EXIT_OK


def _cmd_fixtures(_args: argparse.Namespace) -> int:
    for name, summary in FIXTURE_SUMMARY.items():
        print(f"{name:14s} {summary}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uqtree",
        description="Uncertainty analyses over sampling trees of token sequences.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an analysis spec file")
    p_run.add_argument("--spec", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None)
    p_run.set_defaults(func=_cmd_run)

    p_ingest = sub.add_parser("ingest", help="load a logprob trace into a replay model")
    p_ingest.add_argument("--trace", required=True)
    p_ingest.add_argument("--smoothing", type=float, default=0.0)
    mode = p_ingest.add_mutually_exclusive_group()
    mode.add_argument("--strict", dest="strict", action="store_true", default=True)
    mode.add_argument("--lenient", dest="strict", action="store_false")
    p_ingest.set_defaults(func=_cmd_ingest)

    p_dump = sub.add_parser("dump-tree", help="write a deterministic tree snapshot")
    p_dump.add_argument("--model", required=True)
    p_dump.add_argument("--depth", type=int, required=True)
    p_dump.add_argument("--out", default=None)
    p_dump.add_argument("--context", default="")
    p_dump.set_defaults(func=_cmd_dump_tree)

    p_fix = sub.add_parser("fixtures", help="list built-in fixture models")
    p_fix.set_defaults(func=_cmd_fixtures)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    level = os.environ.get("UQTREE_LOG", "warn").upper()
    logging.basicConfig(level=getattr(logging, level if level != "WARN" else "WARNING", logging.WARNING))
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliParseError, FileNotFoundError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DOMAIN_ERRORS as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except Exception as exc:  # noqa: BLE001 - invariant breaches map to status 4
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
