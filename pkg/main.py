#!/usr/bin/env python3
"""
Malware Detection Benchmark Toolkit
악성코드 탐지 분류기 벤치마크 도구

메인 애플리케이션 - 데이터 생성부터 벤치마크까지 하위 명령으로 실행합니다.
"""
import sys
import os
import argparse
import dataclasses

# 프로젝트 루트를 path에 추가
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import config
from modules.data import SynthSpec, infer_schema, kaggle_schema, load_csv, save_csv, synth_generate
from modules.preprocess import zscore_filter, fit_scaler, apply_scaler
from modules.selection import rfe, apply_selection, project
from modules import model_registry
from modules.metrics import evaluate_scores, RocCurve
from modules.bench import CLOCKS, load_plan, run_benchmark
from modules.report_generator import render_report
from utils.console import log
from utils.errors import MalDetError, InvalidConfig, IoError
from utils.serialization import save_json, load_json


def print_banner():
    """애플리케이션 배너를 출력합니다."""
    log(f"""
╔══════════════════════════════════════════════════════════════╗
║                                                              ║
║   Malware Detection Benchmark Toolkit                        ║
║   악성코드 탐지 분류기 벤치마크                              ║
║                                                              ║
║   Version: {config.VERSION:<50}║
║                                                              ║
╚══════════════════════════════════════════════════════════════╝
""")


def _read_json(path: str, what: str):
    try:
        return load_json(path)
    except OSError as e:
        raise IoError(f"cannot read {what} {path}: {e}")
    except ValueError as e:
        raise InvalidConfig(f"{what} {path} is not valid JSON: {e}")


def _schema_for(path: str, args):
    if getattr(args, "schema", "infer") == "kaggle":
        return kaggle_schema(args.label_col)
    return infer_schema(path, args.label_col)


# ============== Subcommands ==============

def cmd_synth(args) -> int:
    spec = SynthSpec(
        n_rows=args.rows,
        n_features=args.features,
        n_informative=args.informative,
        class_separation=args.sep,
        label_flip_rate=args.flip,
        seed=args.seed,
        pattern=args.pattern,
    )
    data = synth_generate(spec)
    save_csv(data, args.out)
    log(f"✅ 합성 데이터 저장: {args.out} ({data.n_rows} rows)")
    return 0


def cmd_preprocess(args) -> int:
    data = load_csv(args.input, _schema_for(args.input, args))
    clean, report = zscore_filter(data, args.z_thresh)
    if args.report:
        save_json(report, args.report)
    save_csv(clean, args.out)
    log(f"✅ 전처리 완료: {clean.n_rows}/{data.n_rows} rows → {args.out}")
    return 0


def cmd_select(args) -> int:
    """입력 파일 전체를 학습 데이터로 보고 RFE를 수행합니다."""
    data = load_csv(args.input, _schema_for(args.input, args))
    result = rfe(data, k=args.k, estimator=args.estimator, step=args.step, seed=args.seed)
    save_json(result, args.out)
    log(f"✅ 선택된 특징 {len(result['selected'])}개 → {args.out}")
    return 0


def cmd_train(args) -> int:
    overrides = _read_json(args.config, "config") if args.config else {}
    if not isinstance(overrides, dict):
        raise InvalidConfig("model config must be a JSON object")
    data = load_csv(args.train, _schema_for(args.train, args))
    if args.selection:
        data = apply_selection(data, _read_json(args.selection, "selection"))

    stats = fit_scaler(data)
    cfg = model_registry.make_config(args.model, overrides, seed=args.seed)
    model = model_registry.fit_model(args.model, apply_scaler(data, stats), cfg)
    model_registry.save_model(model, args.out, scaler=stats)
    if args.trace and model.trace is not None:
        model.trace.to_csv(args.trace, index=False, float_format="%.17g")
    log(f"✅ {args.model} 학습 완료 → {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    model, stats = model_registry.load_model(args.model)
    data = load_csv(args.test, _schema_for(args.test, args))
    data = project(data, list(model.columns))
    if stats is not None:
        data = apply_scaler(data, stats)

    scores = model_registry.predict_scores(model, data.rows)
    report = evaluate_scores(model.family, data.labels, scores, model.threshold)
    save_json(report, args.out)
    if args.roc:
        if report["roc"] is None:
            log("⚠️ 테스트 데이터에 한 클래스만 있어 ROC를 저장하지 않습니다.")
        else:
            RocCurve.from_dict(report["roc"]).to_frame().to_csv(args.roc, index=False, float_format="%.17g")
    auc = "n/a" if report["auc"] is None else f"{report['auc']:.4f}"
    log(f"✅ accuracy={report['accuracy']:.4f} auc={auc} mcc={report['mcc']:.4f} → {args.out}")
    return 0


def cmd_bench(args) -> int:
    plan = load_plan(args.plan)
    if args.clock:
        plan = dataclasses.replace(plan, clock=args.clock)
    if plan.clock == "perf_counter":
        log("[BENCH] clock=perf_counter: 학습 시간이 실측값이라 보고서가 실행마다 달라집니다 (바이트 단위 재현은 --clock tick)")
    report = run_benchmark(plan)
    render_report(report, "json", args.out)
    if args.markdown:
        render_report(report, "markdown", args.markdown)
    if args.csv_dir:
        render_report(report, "csv-bundle", args.csv_dir)

    log("\n📊 모델별 결과:")
    log("-" * 40)
    for m in report["models"]:
        log(f"  {m['model_id']:<10} cv={m['cv']['mean']['accuracy']:.4f}  test={m['test']['accuracy']:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Malware Detection Benchmark Toolkit",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
예시:
  python main.py synth --rows 10000 --features 10 --informative 2 --sep 8 --out synth.csv
  python main.py preprocess --in malware.csv --schema kaggle --report prep.json --out clean.csv
  python main.py bench --plan plan.json --out report.json --markdown report.md --csv-dir series/
        """
    )
    parser.add_argument("--quiet", "-q", action="store_true", help="진행 로그 끄기")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_args(p, flag="--in", dest="input"):
        p.add_argument(flag, dest=dest, required=True, help="입력 CSV")
        p.add_argument("--label-col", default=config.LABEL_COLUMN, help="라벨 컬럼 이름")
        p.add_argument("--schema", choices=["infer", "kaggle"], default="infer",
                       help="infer: 헤더에서 추론 / kaggle: 악성코드 코퍼스 스키마")

    p = sub.add_parser("synth", help="합성 데이터 생성")
    p.add_argument("--rows", type=int, default=1000)
    p.add_argument("--features", type=int, default=10)
    p.add_argument("--informative", type=int, default=2)
    p.add_argument("--sep", type=float, default=2.0)
    p.add_argument("--flip", type=float, default=0.0)
    p.add_argument("--pattern", choices=["gaussian", "xor"], default="gaussian")
    p.add_argument("--seed", type=int, default=config.MASTER_SEED)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="Z-score 이상치 제거")
    add_data_args(p)
    p.add_argument("--z-thresh", type=float, default=config.Z_THRESHOLD)
    p.add_argument("--report", help="PreprocessReport JSON 경로")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("select", help="RFE 특징 선택")
    add_data_args(p)
    p.add_argument("--k", type=int, default=config.RFE_K)
    p.add_argument("--estimator", choices=list(model_registry.IMPORTANCE_FAMILIES), default=config.RFE_ESTIMATOR)
    p.add_argument("--step", type=int, default=config.RFE_STEP)
    p.add_argument("--seed", type=int, default=config.MASTER_SEED)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("train", help="단일 모델 학습")
    add_data_args(p, flag="--train", dest="train")
    p.add_argument("--model", choices=sorted(model_registry.CONFIG_CLASSES), required=True)
    p.add_argument("--config", help="부분 설정 JSON (계열 기본값에 덮어씀)")
    p.add_argument("--selection", help="RFE 결과 JSON (선택된 컬럼만 사용)")
    p.add_argument("--seed", type=int, default=config.MASTER_SEED)
    p.add_argument("--trace", help="신경망 학습 이력 CSV 경로")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="저장된 모델 평가")
    add_data_args(p, flag="--test", dest="test")
    p.add_argument("--model", required=True, help="train이 저장한 모델 JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--roc", help="ROC 곡선 CSV 경로")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="전체 벤치마크 실행")
    p.add_argument("--plan", required=True, help="BenchmarkPlan JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--markdown")
    p.add_argument("--clock", choices=list(CLOCKS),
                   help="계획의 clock을 덮어씀. perf_counter(계획 기본값)는 실측 학습 시간, "
                        "tick은 학습 1회를 1ms로 기록하여 같은 계획이면 바이트 단위로 동일한 JSON을 만듭니다")
    p.add_argument("--csv-dir")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    """메인 함수 - CLI 인터페이스를 제공합니다. 종료 코드를 반환합니다."""
    args = build_parser().parse_args(argv)
    if args.quiet:
        config.VERBOSE = False

    print_banner()
    try:
        return args.func(args)
    except KeyboardInterrupt:
        print("\n\n⚠️ 사용자에 의해 중단되었습니다.", file=sys.stderr)
        return 130
    except MalDetError as e:
        print(f"\n❌ {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        print(f"\n❌ 오류 발생: {e}", file=sys.stderr)
        import traceback
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
