"""Command line front end.

Exit codes: 0 success, 1 usage error, 2 data error. Errors go to stderr as
one machine-readable JSON line each.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import engine as eng
from .adapters import CueLexicon, RuleBasedGuidance, TermAliasTable
from .benchmark import POLICY_IDS, PolicySpec, run_benchmark, write_report
from .dialogue import (
    CorpusManifest,
    generate_dialogue,
    read_corpus,
    write_corpus,
)
from .errors import DopiError
from .kg import build_graph, load_cases, load_graph, save_graph
from .simulator import SimulatedPatient


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _err_line("USAGE", message)
        raise SystemExit(1)


def _err_line(code: str, message: str) -> None:
    print(json.dumps({"error": {"code": code, "message": message}}), file=sys.stderr)


def _build_parser() -> _Parser:
    parser = _Parser(prog="dopi", description="Knowledge-graph interrogation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", help="build a knowledge graph from case tuples")
    p.add_argument("cases")
    p.add_argument("out")
    p.add_argument("--smoothing", type=float, default=0.0)

    p = sub.add_parser("gen-dialogues", help="synthesize a dialogue corpus")
    p.add_argument("graph")
    p.add_argument("cases")
    p.add_argument("out")
    p.add_argument("--low-info", action="store_true",
                   help="generate the low-information split (0/1 disclosed symptoms)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--disclosure", type=int, default=2)
    p.add_argument("--epsilon", type=float, default=0.9)
    p.add_argument("--max-rounds", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=3)
    p.add_argument("--sigma0", type=float, default=0.05)
    p.add_argument("--misjudgment", type=float, default=0.0)
    p.add_argument("--corpus-id", default=None)

    p = sub.add_parser("validate-corpus", help="check a corpus file against the schema")
    p.add_argument("corpus")

    p = sub.add_parser("eval", help="run policy benchmarks over a corpus")
    p.add_argument("graph")
    p.add_argument("corpus")
    p.add_argument("--policies", default="dopi,no_question",
                   help=f"comma-separated subset of {','.join(POLICY_IDS)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write the JSON report here")

    p = sub.add_parser("serve", help="run the HTTP consultation service")
    p.add_argument("graph", nargs="?", default=None,
                   help="graph file (falls back to DOPI_GRAPH)")
    p.add_argument("--port", type=int, default=None, help="falls back to DOPI_PORT, then 8000")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--aliases", default=None)
    p.add_argument("--log-dir", default=None)
    p.add_argument("--ui", default=None, metavar="DIR",
                   help="serve a built chat UI from this directory at /")

    p = sub.add_parser("consult", help="interactive consultation in the terminal")
    p.add_argument("graph")
    p.add_argument("--aliases", default=None)
    p.add_argument("--epsilon", type=float, default=0.9)
    p.add_argument("--max-rounds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)

    return parser


def _cmd_build_graph(args) -> int:
    cases = load_cases(args.cases)
    graph = build_graph(cases, smoothing=args.smoothing)
    save_graph(graph, args.out)
    print(f"built graph: {len(graph.symptoms)} symptoms, {len(graph.diseases)} diseases, "
          f"{len(graph.sd_weights)} edges -> {args.out}")
    return 0


def _gen_config(args, seed: int) -> eng.EngineConfig:
    return eng.EngineConfig(
        epsilon_stop=args.epsilon,
        max_rounds=args.max_rounds,
        batch_size=args.batch_size,
        noise=eng.NoiseSchedule(sigma0=args.sigma0),
        seed=seed,
    )


def _cmd_gen_dialogues(args) -> int:
    graph = load_graph(args.graph)
    cases = sorted(load_cases(args.cases), key=lambda c: c.disease)
    table = TermAliasTable.for_graph(graph)
    guidance = RuleBasedGuidance(table)
    transcripts = []
    for idx, case in enumerate(cases):
        state = np.random.SeedSequence([args.seed, idx]).generate_state(2)
        engine_seed, patient_seed = int(state[0]), int(state[1])
        disclosure = (idx % 2) if args.low_info else args.disclosure
        patient = SimulatedPatient(
            truth=case,
            initial_disclosure=disclosure,
            misjudgment_rate=args.misjudgment,
            seed=patient_seed,
        )
        transcripts.append(
            generate_dialogue(case, graph, _gen_config(args, engine_seed), patient, guidance)
        )
    manifest = CorpusManifest(
        corpus_id=args.corpus_id or ("corpus-lowinfo" if args.low_info else "corpus"),
        graph_version=graph.version,
        engine_config=_gen_config(args, args.seed).to_dict(),
        patient_config={"misjudgment_rate": args.misjudgment, "random_disclosure": False},
        split="low_information" if args.low_info else "full",
    )
    write_corpus(transcripts, manifest, args.out)
    print(f"wrote {len(transcripts)} transcripts -> {args.out}")
    return 0


def _cmd_validate_corpus(args) -> int:
    manifest, transcripts = read_corpus(args.corpus)
    low_info = sum(1 for t in transcripts if len(t.initial_disclosure()) <= 1)
    print(
        f"{args.corpus}: valid ({manifest.split} split, {len(transcripts)} transcripts, "
        f"{low_info} low-information, graph version {manifest.graph_version})"
    )
    return 0


def _cmd_eval(args) -> int:
    graph = load_graph(args.graph)
    manifest, transcripts = read_corpus(args.corpus)
    policies = [PolicySpec(id=p.strip()) for p in args.policies.split(",") if p.strip()]
    report = run_benchmark(manifest, transcripts, policies, graph, seed=args.seed)
    print(report.to_table())
    if args.out:
        write_report(report, args.out)
        print(f"report -> {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    graph_path = args.graph or os.environ.get("DOPI_GRAPH")
    if not graph_path:
        _err_line("USAGE", "no graph given and DOPI_GRAPH is not set")
        return 1
    graph = load_graph(graph_path)
    table = (
        TermAliasTable.from_json(args.aliases, graph)
        if args.aliases
        else TermAliasTable.for_graph(graph)
    )
    app = create_app(graph, alias_table=table, log_dir=args.log_dir)
    if args.ui:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=args.ui, html=True), name="ui")
    port = args.port or int(os.environ.get("DOPI_PORT", "8000"))
    uvicorn.run(app, host=args.host, port=port)
    return 0


def _parse_console_answers(line: str, batch, guidance: RuleBasedGuidance) -> dict:
    tokens = line.strip().lower().split()
    mapping = {"y": eng.Answer.PRESENT, "n": eng.Answer.ABSENT, "u": eng.Answer.UNSURE}
    if tokens and len(tokens) == len(batch.symptoms) and all(t in mapping for t in tokens):
        return {s: mapping[t] for s, t in zip(batch.symptoms, tokens)}
    return guidance.parse_answer(line, batch)


def _cmd_consult(args) -> int:
    graph = load_graph(args.graph)
    table = (
        TermAliasTable.from_json(args.aliases, graph)
        if args.aliases
        else TermAliasTable.for_graph(graph)
    )
    guidance = RuleBasedGuidance(table, CueLexicon.default())
    config = eng.EngineConfig(
        epsilon_stop=args.epsilon, max_rounds=args.max_rounds, seed=args.seed
    )

    print("Describe your symptoms:")
    line = sys.stdin.readline()
    if not line:
        _err_line("DATA", "no input")
        return 2
    symptoms = guidance.align(line)
    if not symptoms:
        print("No symptoms recognized; please use terms from the knowledge graph.")
        _err_line("DATA", "no symptoms recognized")
        return 2
    print("Recognized: " + ", ".join(sorted(symptoms)))

    session = eng.start_session(graph, symptoms, config)
    while session.state is eng.SessionState.READY_TO_ASK:
        batch = eng.next_questions(session)
        if batch is None:
            break
        print(guidance.render_question(batch))
        print(f"[answer with {len(batch.symptoms)} of y/n/u, or free text]")
        line = sys.stdin.readline()
        if not line:
            # EOF mid-consultation: mark the batch unsure and stop asking.
            eng.record_answers(session, {s: eng.Answer.UNSURE for s in batch.symptoms})
            break
        eng.record_answers(session, _parse_console_answers(line, batch, guidance))

    if session.state is not eng.SessionState.FINALIZED:
        eng.force_finalize(session)
    diagnosis = eng.finalize(session)
    print()
    print(f"Diagnosis: {diagnosis.disease} (confidence {diagnosis.confidence:.2f})")
    print(diagnosis.advice_text)
    return 0


_COMMANDS = {
    "build-graph": _cmd_build_graph,
    "gen-dialogues": _cmd_gen_dialogues,
    "validate-corpus": _cmd_validate_corpus,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
    "consult": _cmd_consult,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DopiError as exc:
        _err_line(type(exc).__name__, str(exc))
        return 2
    except OSError as exc:
        _err_line("IO", str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
