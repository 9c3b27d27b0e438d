"""``dft-forge`` command line: one subcommand per pipeline stage.

Exit codes: 0 success, 1 domain failure (violations under ``--strict``, a
failed repair, a non-equivalent pair), 2 usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from functools import partial
from pathlib import Path

import numpy as np

from . import corpus, lint as dft_lint, retrieval, sim, tfidf
from .config import CliConfig, ConfigError, resolve
from .netlist import NetlistError, parse_netlist
from .neural import AutoencoderModel, TrainConfig, train
from .synth import SynthesisError, SynthToolMissing, synthesize_to_json

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _synth(cfg: CliConfig):
    return partial(synthesize_to_json, command=cfg.synth_command)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _netlist(cfg: CliConfig, path: str):
    return parse_netlist(_synth(cfg)(_read(path)))


def _out(cfg: CliConfig, *parts: str) -> Path:
    base = Path(cfg.out_dir).resolve()
    path = base.joinpath(*parts).resolve()
    if base != path and base not in path.parents:
        raise UsageError(f"refusing to write outside the output directory: {path}")
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _load_manifest(path: str) -> corpus.Manifest:
    try:
        return corpus.Manifest.load(path)
    except (OSError, corpus.ManifestError) as exc:
        raise UsageError(str(exc)) from exc


def _labels(entries) -> np.ndarray:
    return np.array([dft_lint.one_hot(dft_lint.DftErrorKind[e.label]) for e in entries], dtype=np.float64)


# ----------------------------------------------------------------- commands


def cmd_lint(args, cfg: CliConfig) -> int:
    violations, label = dft_lint.lint(_netlist(cfg, args.design))
    kinds = sorted(k.name for k in dft_lint.root_cause_kinds(violations))
    payload = {"design": Path(args.design).name, **dft_lint.report_to_dict(violations, label), "root_causes": kinds}
    _emit(args, payload, dft_lint.render_report(violations, label))
    return EXIT_FAIL if (args.strict and violations) else EXIT_OK


def cmd_vectorize_fit(args, cfg: CliConfig) -> int:
    if args.manifest:
        m = _load_manifest(args.manifest)
        docs = [m.read(e) for e in m.split("train")]
    else:
        docs = [_synth(cfg)(_read(p)) for p in args.designs]
    if not docs:
        raise UsageError("no training documents (give --manifest or design files)")
    model = tfidf.fit(docs, args.max_features)
    path = _out(cfg, "tfidf.json")
    model.save(path)
    _emit(args, {"path": str(path), "documents": len(docs), "vocabulary": len(model.vocabulary),
                 "fitted_on": model.fitted_on},
          f"fitted TF-IDF on {len(docs)} documents, {len(model.vocabulary)} terms -> {path}")
    return EXIT_OK


def cmd_vectorize(args, cfg: CliConfig) -> int:
    model = tfidf.TfidfModel.load(args.tfidf)
    fv = tfidf.transform(model, _synth(cfg)(_read(args.design)))
    nz = np.flatnonzero(fv.x)
    terms = {model.vocabulary[i]: round(float(fv.x[i]), 12) for i in nz}
    if args.save:
        np.save(_out(cfg, Path(args.design).stem + ".npy"), fv.x)
    _emit(args, {"dim": int(fv.x.size), "oov": fv.oov, "nonzero": int(nz.size), "terms": terms},
          f"{nz.size} non-zero of {fv.x.size} coordinates" + (" (no known terms)" if fv.oov else ""))
    return EXIT_OK


def cmd_train(args, cfg: CliConfig) -> int:
    m = _load_manifest(args.manifest)
    vec = tfidf.TfidfModel.load(args.tfidf)
    entries = m.split("train")
    if len(entries) < 2:
        raise UsageError("training split needs at least two designs")
    X = tfidf.transform_many(vec, [m.read(e) for e in entries])
    config = TrainConfig(epochs=cfg.epochs, seed=cfg.seed)
    model, history = train(X, _labels(entries), config)
    path = _out(cfg, "model.npz")
    model.save(path, config)
    history.write_csv(_out(cfg, "training_log.csv"))
    last = history.records[-1]
    _emit(args, {"path": str(path), "epochs": last.epoch, "loss": last.loss.L, "accuracy": last.accuracy},
          f"trained {last.epoch} epochs, final L={last.loss.L:.6f}, train accuracy {last.accuracy:.3f} -> {path}")
    return EXIT_OK


def cmd_index(args, cfg: CliConfig) -> int:
    m = _load_manifest(args.manifest)
    vec = tfidf.TfidfModel.load(args.tfidf)
    model = AutoencoderModel.load(args.model)
    refs, ids = [], []
    fixes = Path(args.fixes)
    for e in m.split("reference"):
        candidates = sorted(fixes.glob(f"{e.id}.*"))
        if not candidates:
            raise UsageError(f"no validated fix for reference {e.id} in {fixes}")
        refs.append((m.read(e, "source"), candidates[0].read_text(), m.read(e)))
        ids.append(e.id)
    try:
        index = retrieval.build_index(model, vec, refs, ids, to_json=_synth(cfg))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    path = _out(cfg, "index")
    index.save(path)
    _emit(args, {"path": str(path), "entries": len(index)}, f"indexed {len(index)} references -> {path}")
    return EXIT_OK


def cmd_retrieve(args, cfg: CliConfig) -> int:
    index = retrieval.ReferenceIndex.load(args.index)
    vec = tfidf.TfidfModel.load(args.tfidf)
    model = AutoencoderModel.load(args.model)
    z = retrieval.embed_json(model, vec, _synth(cfg)(_read(args.design)))
    result, entry = retrieval.retrieve(index, z)
    top = [{"id": index.entries[i].id, "score": float(result.scores[i])} for i in result.top(args.top)]
    _emit(args, {"best": entry.id, "s_max": result.s_max, "top": top}, f"{entry.id}\t{result.s_max:.6f}")
    return EXIT_OK


def cmd_equiv(args, cfg: CliConfig) -> int:
    a, b = _netlist(cfg, args.a), _netlist(cfg, args.b)
    budget = sim.EquivBudget(cfg.equiv_stimuli, cfg.equiv_cycles, cfg.seed)
    result = sim.check_equivalence(a, b, budget)
    if args.json:
        print(result.to_json())
    else:
        from .orchestrator.repair import render_equivalence
        print(render_equivalence(result))
    return EXIT_OK if result.verdict is sim.Verdict.EQUIVALENT_BOUNDED else EXIT_FAIL


def _llm(args, cfg: CliConfig):
    from .orchestrator.llm import HttpLlmClient, LlmClientSpec, MockLlmClient
    if args.mock_llm:
        return MockLlmClient(args.mock_llm)
    if not (cfg.llm_endpoint and cfg.llm_model):
        raise UsageError("no LLM configured: give --mock-llm DIR or set llm_endpoint and llm_model")
    return HttpLlmClient(LlmClientSpec(cfg.llm_endpoint, cfg.llm_model, cfg.llm_token_env, cfg.llm_timeout,
                                       cfg.llm_max_retries))


def _repair_fn(args, cfg: CliConfig):
    from .orchestrator.repair import repair
    use_rag = not args.no_rag
    kw = {}
    if use_rag:
        if not (args.index and args.tfidf and args.model):
            raise UsageError("retrieval needs --index, --tfidf and --model (or pass --no-rag)")
        kw = {"index": retrieval.ReferenceIndex.load(args.index), "tfidf": tfidf.TfidfModel.load(args.tfidf),
              "model": AutoencoderModel.load(args.model)}
    llm = _llm(args, cfg)
    budget = sim.EquivBudget(cfg.equiv_stimuli, cfg.equiv_cycles, cfg.seed)

    def run(design_id, source, session_path):
        return repair(source, design_id=design_id, llm=llm, k=cfg.k, synth=_synth(cfg), budget=budget,
                      use_rag=use_rag, session_path=session_path, provenance=cfg.to_dict(), **kw)
    return run


def cmd_repair(args, cfg: CliConfig) -> int:
    from .orchestrator.repair import RepairAborted, Status
    run = _repair_fn(args, cfg)
    design_id = args.id or Path(args.design).stem
    try:
        session = run(design_id, _read(args.design), _out(cfg, "sessions", f"{design_id}.json"))
    except RepairAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.json:
        print(session.to_json(), end="")
    else:
        print(f"{design_id}: {session.status.value} after {len(session.iterations)} iteration(s)")
    return EXIT_OK if session.status is Status.REPAIRED else EXIT_FAIL


def cmd_admit(args, cfg: CliConfig) -> int:
    results = corpus.admit_many(args.designs, _synth(cfg), cfg.jobs)
    path = _out(cfg, "admissions.jsonl")
    with open(path, "w") as fh:
        for a in results:
            rec = a.to_dict()
            if a.admitted:
                net = _out(cfg, "admitted", f"{a.id}.json")
                net.write_text(a.json_text)
                rec["json"] = str(net)
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    n_ok = sum(a.admitted for a in results)
    _emit(args, {"path": str(path), "admitted": n_ok, "rejected": len(results) - n_ok,
                 "results": [a.to_dict() for a in results]},
          "\n".join(f"{a.id}\t{'admitted ' + a.label.name if a.admitted else 'rejected ' + a.reason}"
                    for a in results))
    return EXIT_OK


def cmd_partition(args, cfg: CliConfig) -> int:
    admitted = []
    for line in _read(args.admissions).splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec["verdict"] != "admitted":
            continue
        admitted.append(corpus.Admission(rec["id"], rec["source"], True, label=dft_lint.DftErrorKind[rec["label"]],
                                         json_text=_read(rec["json"])))
    if not admitted:
        raise UsageError("no admitted designs to partition")
    manifest = corpus.partition(admitted, cfg.seed, _out(cfg))
    path = _out(cfg, "manifest.jsonl")
    manifest.save(path)
    _out(cfg, "manifest.config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    counts = manifest.counts()
    _emit(args, {"path": str(path), "counts": counts},
          "\n".join(f"{s}: {sum(c.values())} {c}" for s, c in counts.items()))
    return EXIT_OK


def cmd_eval(args, cfg: CliConfig) -> int:
    from .orchestrator.evaluate import repair_rate, run_batch
    m = _load_manifest(args.manifest)
    designs = [(e.id, m.read(e, "source")) for e in m.split("test")]
    rows = run_batch(designs, _repair_fn(args, cfg), _out(cfg), cfg.jobs)
    rate = repair_rate(rows)
    _emit(args, {"summary": str(_out(cfg, "summary.csv")), "sessions": len(rows), "repair_rate": rate,
                 "rag": not args.no_rag},
          f"{sum(r.status == 'REPAIRED' for r in rows)}/{len(rows)} repaired (rate {rate:.4f})")
    return EXIT_OK


def cmd_generate(args, cfg: CliConfig) -> int:
    from .synthetic import generate_corpus
    designs = generate_corpus(args.n, cfg.seed)
    for d in designs:
        _out(cfg, "designs", f"{d.id}.json").write_text(d.buggy_json)
        _out(cfg, "fixes", f"{d.id}.json").write_text(d.fixed_json)
    _emit(args, {"designs": len(designs), "path": str(_out(cfg, "designs"))},
          f"wrote {len(designs)} buggy/fixed pairs under {_out(cfg)}")
    return EXIT_OK


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON config file (default: $DFT_FORGE_CONFIG)")
    common.add_argument("--json", action="store_true", help="machine-readable output on stdout")
    common.add_argument("--seed", type=int, help="seed for every stochastic step")
    common.add_argument("--out", dest="out_dir", help="output directory (default: current directory)")
    common.add_argument("--jobs", type=int, help="worker threads for batch commands")
    common.add_argument("--synth-command", help="synthesis command with {input}/{output} placeholders")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="dft-forge", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, fn, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        sp.set_defaults(func=fn)
        return sp

    sp = add("lint", cmd_lint, "report DFT violations of a Verilog or JSON design")
    sp.add_argument("design")
    sp.add_argument("--strict", action="store_true", help="exit 1 if any violation is found")

    sp = add("vectorize-fit", cmd_vectorize_fit, "fit the TF-IDF vocabulary on the train split")
    sp.add_argument("designs", nargs="*")
    sp.add_argument("--manifest")
    sp.add_argument("--max-features", type=int, default=tfidf.DIM)

    sp = add("vectorize", cmd_vectorize, "TF-IDF feature vector of one design")
    sp.add_argument("design")
    sp.add_argument("--tfidf", required=True)
    sp.add_argument("--save", action="store_true", help="also write <design>.npy to the output directory")

    sp = add("train", cmd_train, "train the autoencoder on the train split")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--tfidf", required=True)
    sp.add_argument("--epochs", type=int)

    sp = add("index", cmd_index, "embed the reference split with its validated fixes")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--tfidf", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--fixes", required=True, help="directory holding <id>.v or <id>.json fixes")

    sp = add("retrieve", cmd_retrieve, "most similar reference for a design")
    sp.add_argument("--index", required=True)
    sp.add_argument("--design", required=True)
    sp.add_argument("--tfidf", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--top", type=int, default=5)

    sp = add("equiv", cmd_equiv, "bounded equivalence check of two designs")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--stimuli", dest="equiv_stimuli", type=int)
    sp.add_argument("--cycles", dest="equiv_cycles", type=int)

    for name, fn, help_text in (("repair", cmd_repair, "repair one design with an LLM"),
                                ("eval", cmd_eval, "repair the whole test split and summarise")):
        sp = add(name, fn, help_text)
        if name == "repair":
            sp.add_argument("--design", required=True)
            sp.add_argument("--id", help="design id (default: file stem)")
        else:
            sp.add_argument("--manifest", required=True)
        sp.add_argument("--index")
        sp.add_argument("--tfidf")
        sp.add_argument("--model")
        sp.add_argument("--mock-llm", help="directory of scripted responses")
        sp.add_argument("--no-rag", action="store_true", help="ablation: prompt without a reference pair")
        sp.add_argument("--k", type=int, help="maximum iterations")
        sp.add_argument("--llm-endpoint")
        sp.add_argument("--llm-model")
        sp.add_argument("--llm-token-env", help="name of the environment variable holding the token")

    sp = add("admit", cmd_admit, "filter designs down to single-violation ones")
    sp.add_argument("designs", nargs="+")

    sp = add("partition", cmd_partition, "stratified train/reference/test split")
    sp.add_argument("--admissions", required=True)

    sp = add("generate", cmd_generate, "write a synthetic corpus of buggy/fixed pairs")
    sp.add_argument("--n", type=int, default=200)
    return p


_CONFIG_FLAGS = ("out_dir", "seed", "jobs", "k", "synth_command", "equiv_stimuli", "equiv_cycles", "epochs",
                 "llm_endpoint", "llm_model", "llm_token_env")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve({k: getattr(args, k, None) for k in _CONFIG_FLAGS}, config_path=args.config)
        return args.func(args, cfg)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (SynthToolMissing, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SynthesisError, NetlistError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
