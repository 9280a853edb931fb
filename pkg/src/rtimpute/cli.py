"""Single entry point tying the modules into reproducible workflows.

Subcommands: synth, fit, popchar, impute, simulate, report, dca, serve.
Every run prints the resolved configuration (including the seed) as header
lines so outputs can be reproduced.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import cox as cox_mod
from .errors import DegenerateLP, RtImputeError
from .imputation import Method, VariableSet, impute_joint, impute_mean
from .metrics import DEFAULT_THRESHOLDS, decision_curve, grouped_km_calibration
from .population import (
    draw_local_sample,
    estimate_characteristics,
    ingest_csv,
    load_characteristics,
    pool_datasets,
    save_characteristics,
    write_csv,
)
from .schema import PatientRecord, Schema
from .simulation import (
    SimulationConfig,
    Study,
    default_scenarios,
    default_schema,
    default_spec,
    evaluate,
    generate_synthetic_cohorts,
    read_rows_csv,
    run_external_model_simulation,
    run_loocv_simulation,
    write_rows_csv,
)

METHOD_ORDER = (Method.M_IMP, Method.JMI, Method.JMI_AUX)
METHOD_LABEL = {Method.M_IMP: "M-Imp", Method.JMI: "JMI", Method.JMI_AUX: "JMI-aux"}


def _print_header(args: argparse.Namespace):
    resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    print(f"# rtimpute {args.command}: " + json.dumps(resolved, default=str))


def _load_schema_arg(path):
    if path is None:
        return default_schema()
    with open(path) as fh:
        return Schema.from_dict(json.load(fh))


def _parse_methods(spec: str):
    return tuple(Method.from_code(tok) for tok in spec.split(","))


def _parse_scenarios(spec: str, schema: Schema):
    catalog = {s.id: s for s in default_scenarios()}
    if spec == "all":
        return tuple(catalog.values())
    out = []
    for tok in spec.split(","):
        tok = tok.strip()
        if tok.isdigit() and int(tok) in catalog:
            out.append(catalog[int(tok)])
        else:
            raise SystemExit(f"error: unknown scenario {tok!r} (use ids 1-8 or 'all')")
    return tuple(out)


# --- subcommands ------------------------------------------------------------


def cmd_synth(args):
    spec = default_spec(
        n_local=args.n_local,
        n_external=args.n_external,
        shift_scale=args.shift_scale,
    )
    local, external = generate_synthetic_cohorts(spec, args.seed)
    write_csv(local, args.out_local)
    write_csv(external, args.out_external)
    if args.out_schema:
        with open(args.out_schema, "w") as fh:
            json.dump(local.schema.to_dict(), fh, indent=1)
    print(f"wrote {local.n} local rows to {args.out_local}")
    print(f"wrote {external.n} external rows to {args.out_external}")


def cmd_fit(args):
    schema = _load_schema_arg(args.schema)
    data = ingest_csv(args.data, schema)
    predictors = args.predictors.split(",") if args.predictors else list(schema.predictor_names)
    model = cox_mod.fit_cox(data, predictors)
    cox_mod.save_model(model, args.out)
    print(f"fitted on n={model.trained_on_n}; beta=" + json.dumps(
        {p: round(float(b), 6) for p, b in zip(model.predictors, model.beta)}))
    print(f"wrote model to {args.out}")


def cmd_popchar(args):
    schema = _load_schema_arg(args.schema)
    if args.popchar_cmd == "estimate":
        data = ingest_csv(args.data, schema)
        variables = args.vars.split(",") if args.vars else list(schema.covariate_names)
        pc = estimate_characteristics(data, variables)
    else:  # pool
        external = ingest_csv(args.external, schema)
        local = ingest_csv(args.local, schema)
        sample, _ = draw_local_sample(local, args.m, args.seed)
        pooled = pool_datasets(external, sample)
        variables = [n for n in schema.covariate_names if n in pooled.schema]
        pc = estimate_characteristics(pooled, variables)
    save_characteristics(pc, args.out)
    print(f"wrote characteristics of {len(pc.variables)} variables (n={pc.n}) to {args.out}")


def cmd_impute(args):
    schema = _load_schema_arg(args.schema)
    pc = load_characteristics(args.popchar)
    record_map = json.load(sys.stdin)
    record = PatientRecord.from_partial(schema, record_map)
    method = Method.from_code(args.method)
    if method is Method.M_IMP:
        result = impute_mean(record, pc)
    elif method is Method.JMI:
        result = impute_joint(record, pc, VariableSet.PREDICTORS_ONLY)
    else:
        result = impute_joint(record, pc, VariableSet.WITH_AUXILIARY)
    json.dump(
        {
            "completed": result.completed,
            "imputed_names": list(result.imputed_names),
            "conditional_sd": result.conditional_sd,
            "method": result.method.code,
        },
        sys.stdout,
        indent=1,
    )
    print()


def cmd_simulate(args):
    schema = _load_schema_arg(args.schema)
    local = ingest_csv(args.local, schema)
    external = ingest_csv(args.external, schema) if args.external else None
    study = {1: Study.LOCAL, 2: Study.EXTERNAL, 3: Study.ENRICHED, 4: Study.EXTERNAL_MODEL}[args.study]
    config = SimulationConfig(
        study=study,
        scenarios=_parse_scenarios(args.scenario, schema),
        methods=_parse_methods(args.methods),
        enrichment_m=args.enrich,
        seed=args.seed,
        fast_loocv=args.fast_loocv,
        jobs=args.jobs,
    )
    if study is Study.EXTERNAL_MODEL:
        if external is None or args.model is None:
            raise SystemExit("error: --external and --model are required for study 4")
        model = cox_mod.load_external_model(args.model, schema)
        rows = run_external_model_simulation(local, external, model, config)
    else:
        if (external is None) != (study is Study.LOCAL):
            raise SystemExit("error: --external is required for studies 2 and 3 (and only those)")
        rows = run_loocv_simulation(local, external, config)
    write_rows_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    if args.report:
        _render_report(rows, config.methods, [s.id for s in config.scenarios], args.report)


def _report_payload(rows, methods, scenario_ids):
    payload = {}
    for sid in scenario_ids:
        block = {}
        mse_mimp = None
        for method in sorted(methods, key=lambda m: m.value):
            try:
                rep = evaluate(rows, method, sid)
                entry = rep.to_dict()
            except DegenerateLP as exc:
                entry = {"error": f"degenerate_lp: {exc}"}
            if method is Method.M_IMP and "mse_lp" in entry:
                mse_mimp = entry["mse_lp"]
            if "mse_lp" in entry:
                entry["mse_pct_vs_mimp"] = (
                    None
                    if mse_mimp in (None, 0.0)
                    else (entry["mse_lp"] - mse_mimp) / mse_mimp * 100.0
                )
            block[method.code] = entry
        payload[str(sid)] = block
    return payload


def _render_report(rows, methods, scenario_ids, fmt):
    payload = _report_payload(rows, methods, scenario_ids)
    if fmt == "json":
        print(json.dumps(payload, indent=1))
        return
    cols = ["method", "mse_lp", "c_index", "citl", "cal_slope", "eo", "n"]
    widths = [9, 22, 9, 9, 10, 8, 7]
    for sid in scenario_ids:
        print(f"scenario {sid}")
        print("  " + "".join(c.ljust(w) for c, w in zip(cols, widths)))
        for method in sorted(methods, key=lambda m: m.value):
            entry = payload[str(sid)][method.code]
            if "error" in entry:
                print("  " + METHOD_LABEL[method].ljust(9) + entry["error"])
                continue
            pct = entry.get("mse_pct_vs_mimp")
            mse_txt = f"{entry['mse_lp']:.4f}"
            if pct is not None:
                mse_txt += f" ({pct:+.2f}%)"
            cells = [
                METHOD_LABEL[method],
                mse_txt,
                f"{entry['c_index']:.4f}",
                f"{entry['citl']:+.4f}",
                f"{entry['cal_slope']:.4f}",
                f"{entry['eo']:.4f}",
                str(entry["n"]),
            ]
            print("  " + "".join(c.ljust(w) for c, w in zip(cells, widths)))


def cmd_report(args):
    rows = read_rows_csv(args.rows)
    methods = sorted({r.method for r in rows}, key=lambda m: m.value)
    scenario_ids = sorted({r.scenario for r in rows})
    _render_report(rows, methods, scenario_ids, args.format)


def cmd_dca(args):
    rows = read_rows_csv(args.rows)
    model = cox_mod.load_model(args.model)
    method = Method.from_code(args.method)
    sub = [r for r in rows if r.method is method and r.scenario == args.scenario]
    if not sub:
        raise SystemExit(f"error: no rows for method {args.method}, scenario {args.scenario}")
    lp = np.array([r.lp_est for r in sub])
    time = np.array([r.time for r in sub])
    status = np.array([r.status for r in sub], dtype=float)
    risk = np.array([cox_mod.absolute_risk(model, v, args.horizon) for v in lp])

    curve = decision_curve(risk, time, status, DEFAULT_THRESHOLDS, args.horizon)
    with open(args.out, "w", newline="") as fh:
        csv.writer(fh).writerows(curve.to_csv_rows())
    print(f"wrote decision curve ({len(curve.thresholds)} thresholds) to {args.out}")
    if args.calibration_out:
        grouped = grouped_km_calibration(risk, time, status, g=5, horizon_days=args.horizon)
        with open(args.calibration_out, "w", newline="") as fh:
            csv.writer(fh).writerows(grouped.to_csv_rows())
        print(f"wrote grouped calibration to {args.calibration_out}")


def cmd_serve(args):
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(args.data_dir), host=args.host, port=args.port)


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rtimpute",
        description="Real-time imputation, risk prediction, and validation workflows.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write synthetic local/external cohort CSVs")
    p.add_argument("--n-local", type=int, default=3000)
    p.add_argument("--n-external", type=int, default=3000)
    p.add_argument("--shift-scale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--out-local", default="local.csv")
    p.add_argument("--out-external", default="external.csv")
    p.add_argument("--out-schema", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit the Cox model and write model JSON")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", default=None)
    p.add_argument("--predictors", default=None, help="comma-separated; default: schema predictors")
    p.add_argument("--seed", type=int, default=0, help="unused; kept for uniform headers")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("popchar", help="estimate or pool population characteristics")
    pc_sub = p.add_subparsers(dest="popchar_cmd", required=True)
    pe = pc_sub.add_parser("estimate")
    pe.add_argument("--data", required=True)
    pe.add_argument("--schema", default=None)
    pe.add_argument("--vars", default=None)
    pe.add_argument("--seed", type=int, default=0)
    pe.add_argument("--out", required=True)
    pe.set_defaults(func=cmd_popchar)
    pp = pc_sub.add_parser("pool")
    pp.add_argument("--external", required=True)
    pp.add_argument("--local", required=True)
    pp.add_argument("--m", type=int, required=True, help="local sample size to stack")
    pp.add_argument("--schema", default=None)
    pp.add_argument("--seed", type=int, default=12345)
    pp.add_argument("--out", required=True)
    pp.set_defaults(func=cmd_popchar)

    p = sub.add_parser("impute", help="complete one record (JSON on stdin)")
    p.add_argument("--popchar", required=True)
    p.add_argument("--schema", default=None)
    p.add_argument("--method", default="jmi_aux", choices=["m_imp", "jmi", "jmi_aux"])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_impute)

    p = sub.add_parser("simulate", help="run a simulation study and write rows CSV")
    p.add_argument("--study", type=int, choices=[1, 2, 3, 4], required=True)
    p.add_argument("--local", required=True)
    p.add_argument("--external", default=None)
    p.add_argument("--model", default=None, help="external model JSON (study 4)")
    p.add_argument("--schema", default=None)
    p.add_argument("--scenario", default="all")
    p.add_argument("--methods", default="m,jmi,jmiaux")
    p.add_argument("--enrich", type=int, default=1500)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--out", default="rows.csv")
    p.add_argument("--report", choices=["table", "json"], default=None)
    p.add_argument("--fast-loocv", action="store_true",
                   help="fit the prediction model once (population characteristics stay leave-one-out)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="render metric tables from a rows CSV")
    p.add_argument("--rows", required=True)
    p.add_argument("--format", choices=["table", "json"], default="table")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("dca", help="write decision-curve CSV from rows + model")
    p.add_argument("--rows", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--method", default="jmi_aux")
    p.add_argument("--scenario", type=int, required=True)
    p.add_argument("--horizon", type=float, default=3650.0)
    p.add_argument("--out", default="dca.csv")
    p.add_argument("--calibration-out", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_dca)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-dir", required=True)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _print_header(args)
    try:
        args.func(args)
    except (RtImputeError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
