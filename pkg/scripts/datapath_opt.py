"""
数据通路优化命令行

Usage:
  python scripts/datapath_opt.py optimize bench/shift_mult.v -o out.v       # 优化并验证
  python scripts/datapath_opt.py optimize in.v --extract greedy --no-verify  # 只做贪心提取
  python scripts/datapath_opt.py optimize in.v --emit-cert cert/             # 写出证书
  python scripts/datapath_opt.py bench                                       # 跑整个基准目录
  python scripts/datapath_opt.py verify cert/                                # 重新验证证书
  python scripts/datapath_opt.py synth-cond --rule fma-merge --wmax 4        # 重新学习一条规则的条件
  python scripts/datapath_opt.py synth-cond --all --save                     # 重新学习全部条件并入库
  python scripts/datapath_opt.py sweep --widths 4-64:4                       # FIR 位宽扫描

退出码：
  0 成功（开启验证时已通过）
  1 其它错误
  2 输入解析失败
  3 达到饱和限制且代价没有任何改进（RTL 照常写出）
  4 证书验证失败（不写 RTL）

日志级别由环境变量 LOG_LEVEL 控制。
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from backend.config import settings
from engine.conditions import ConditionStore
from engine.condsynth import DEFAULT_WMAX, synthesize
from engine.config import CostConstants, RunConfig
from engine.errors import (
    ArityError,
    DatapathError,
    StepFailed,
    UnsupportedConstruct,
    VerilogSyntaxError,
    WidthInferenceError,
)
from engine.pipeline import bench, format_table, optimize_file, sweep, transitions, write_bench
from engine.proof import ProofCertificate, verify_chain
from engine.rules import CATALOG, rule_by_name
from engine.verilang import parse_pattern, print_verilang

logger = logging.getLogger("datapath_opt")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARSE = 2
EXIT_NO_GAIN = 3
EXIT_VERIFY = 4

PARSE_ERRORS = (VerilogSyntaxError, UnsupportedConstruct, WidthInferenceError, ArityError)


# ---------------------------------------------------------------------------
# 配置
# ---------------------------------------------------------------------------

def _add_run_flags(p: argparse.ArgumentParser, iters: int = 30, max_nodes: int = 100_000) -> None:
    p.add_argument("--config", help="RunConfig JSON；命令行参数覆盖其中的字段")
    p.add_argument("--rules", help="启用的规则类别，逗号分隔（arith,logic,exchange,merge,constexp,one_to_two）")
    p.add_argument("--one-to-two", action="store_true", help="额外启用 1×x → (2×x)−x")
    p.add_argument("--iters", type=int, default=None, help=f"饱和轮数上限（默认 {iters}）")
    p.add_argument("--max-nodes", type=int, default=None, help=f"e-node 数上限（默认 {max_nodes}）")
    p.add_argument("--time-limit", type=float, default=None, help="饱和时间上限（秒）")
    p.add_argument("--extract", choices=("greedy", "ilp"), default=None, help="提取方式（默认 ilp）")
    p.add_argument("--ilp-timeout", type=float, default=None, help="ILP 超时（秒）")
    p.add_argument("--ilp-solver", choices=("bnb", "highs"), default=None, help="ILP 求解方式")
    p.add_argument("--no-verify", action="store_true", help="不验证证书")
    p.add_argument("--cost-config", help="代价常数 JSON")
    p.set_defaults(default_iters=iters, default_max_nodes=max_nodes)


def build_config(args: argparse.Namespace) -> RunConfig:
    """
    从命令行参数组装 RunConfig

    Raises:
        ValueError: 未知的规则类别
    """
    config = RunConfig.load(args.config) if args.config else RunConfig(
        max_iters=args.default_iters, max_nodes=args.default_max_nodes)
    config = config.with_rules(args.rules)
    update = {}
    if args.one_to_two:
        update["one_to_two"] = True
    if args.iters is not None:
        update["max_iters"] = args.iters
    if args.max_nodes is not None:
        update["max_nodes"] = args.max_nodes
    if args.time_limit is not None:
        update["time_limit"] = args.time_limit
    if args.extract is not None:
        update["extract"] = args.extract
    if args.ilp_timeout is not None:
        update["ilp_timeout"] = args.ilp_timeout
    if args.ilp_solver is not None:
        update["ilp_solver"] = args.ilp_solver
    if args.no_verify:
        update["verify"] = False
    if args.cost_config:
        update["cost"] = CostConstants.load(args.cost_config)
    for key in ("output", "emit_cert", "dump_egraph", "export_lp"):
        value = getattr(args, key, None)
        if value:
            update[key] = value
    return config.model_copy(update=update)


def _store() -> ConditionStore:
    return ConditionStore.load(Path(settings.CONDITION_STORE_PATH))


# ---------------------------------------------------------------------------
# 子命令
# ---------------------------------------------------------------------------

def cmd_optimize(args: argparse.Namespace) -> int:
    config = build_config(args)
    try:
        result = optimize_file(args.input, config, _store())
    except PARSE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except StepFailed as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY

    if not config.output:
        sys.stdout.write(result.verilog)
    report = result.report()
    if args.report:
        Path(args.report).parent.mkdir(parents=True, exist_ok=True)
        with open(args.report, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2)
    print(
        f"{result.design}: cost {result.cost_before} -> {result.cost_after} "
        f"({result.extraction.status}), adders {result.adders_before} -> {result.adders_after}, "
        f"{report['final_nodes']} e-nodes ({result.saturation.stop_reason})",
        file=sys.stderr,
    )
    return EXIT_NO_GAIN if result.limit_hit and not result.improved else EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    config = build_config(args)
    rows = bench(args.corpus, config, _store())
    out = write_bench(rows, args.out)
    sys.stdout.write(format_table(rows))
    print(f"report written to {out}", file=sys.stderr)
    return EXIT_ERROR if any(r.get("error") for r in rows) else EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    cert = ProofCertificate.load(args.cert)
    try:
        report = verify_chain(cert, args.budget, args.shrink_width, store=_store())
    except PARSE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except StepFailed as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def _synth_targets(args: argparse.Namespace):
    if args.all:
        for entry in CATALOG:
            if entry.condition is None and entry.rhs is not None:
                yield entry.name, parse_pattern(entry.lhs), parse_pattern(entry.rhs)
        return
    if args.rule:
        rw = rule_by_name(args.rule, _store())
        if rw.rhs is None:
            raise ValueError(f"rule {args.rule} has no fixed right-hand side")
        yield args.rule, rw.lhs, rw.rhs
        return
    if not (args.lhs and args.rhs):
        raise ValueError("give --rule, --all, or both --lhs and --rhs")
    yield args.name or "custom", parse_pattern(args.lhs), parse_pattern(args.rhs)


def cmd_synth_cond(args: argparse.Namespace) -> int:
    store = _store()
    reports = {}
    for name, lhs, rhs in _synth_targets(args):
        rep = synthesize(lhs, rhs, wmax=args.wmax, workers=args.workers)
        record = rep.to_record(print_verilang(lhs), print_verilang(rhs))
        reports[name] = {"record": record, "report": rep.to_dict()}
        print(f"{name}: {record['condition']}", file=sys.stderr)
        if args.save:
            store.put(name, rep.condition, "synthesized", lhs=record["lhs"], rhs=record["rhs"],
                      maps=rep.maps, depth=rep.depth)
    if args.save:
        store.save()
        logger.info("saved %s conditions to %s", len(reports), store.path)
    text = json.dumps(reports, indent=2)
    if args.report:
        Path(args.report).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK


def _parse_widths(text: str) -> List[int]:
    """"4,8,16" 或 "4-64" 或 "4-64:4" """
    if "-" in text:
        span, _, step = text.partition(":")
        lo, hi = (int(v) for v in span.split("-", 1))
        return list(range(lo, hi + 1, int(step) if step else 1))
    return [int(v) for v in text.split(",") if v.strip()]


def cmd_sweep(args: argparse.Namespace) -> int:
    config = build_config(args)
    rows = sweep(_parse_widths(args.widths), config, _store())
    for r in rows:
        print(f"{r['width']:>4}  cost {r['cost_after']:>8}  cpa {r['cpa']:>2}  {r['signature']}")
    moves = transitions(rows)
    print(f"architecture transitions at widths: {moves or 'none'}")
    if args.report:
        Path(args.report).parent.mkdir(parents=True, exist_ok=True)
        with open(args.report, "w", encoding="utf-8") as f:
            json.dump({"rows": rows, "transitions": moves}, f, indent=2)
    return EXIT_OK


# ---------------------------------------------------------------------------
# 入口
# ---------------------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="基于 e-graph 的数据通路 RTL 优化")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="优化一个 Verilog 模块")
    p.add_argument("input", help="输入 .v 文件")
    p.add_argument("-o", "--output", help="优化后的 .v；缺省打印到 stdout")
    p.add_argument("--emit-cert", help="证书目录")
    p.add_argument("--dump-egraph", help="饱和后的 e-graph（.json 或 .dot）")
    p.add_argument("--export-lp", help="提取问题的 LP 文件")
    p.add_argument("--report", help="JSON 报告路径")
    _add_run_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("bench", help="跑基准目录")
    p.add_argument("corpus", nargs="?", default=settings.BENCH_DIR, help="基准目录")
    p.add_argument("--out", default=settings.REPORTS_DIR, help="报告目录")
    _add_run_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="重新验证证书目录")
    p.add_argument("cert", help="证书目录（含 manifest.json）")
    p.add_argument("--budget", type=int, default=24, help="穷举的输入总位数上限")
    p.add_argument("--shrink-width", type=int, default=5, help="缩小后的最大位宽")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("synth-cond", help="为重写合成适用条件")
    p.add_argument("--rule", help="目录里的规则名")
    p.add_argument("--all", action="store_true", help="全部依赖条件库的规则")
    p.add_argument("--lhs", help="左侧模式")
    p.add_argument("--rhs", help="右侧模式")
    p.add_argument("--name", help="自定义模式入库时的名字")
    p.add_argument("--wmax", type=int, default=DEFAULT_WMAX, help="枚举的最大位宽")
    p.add_argument("--workers", type=int, default=None, help="打标签的进程数")
    p.add_argument("--save", action="store_true", help="写回条件库")
    p.add_argument("--report", help="JSON 报告路径")
    p.set_defaults(func=cmd_synth_cond)

    p = sub.add_parser("sweep", help="FIR 三抽头位宽扫描")
    p.add_argument("--widths", default="4-64:4", help='位宽列表，如 "4,8,16" 或 "4-64:4"')
    p.add_argument("--report", help="JSON 报告路径")
    _add_run_flags(p, iters=8, max_nodes=20_000)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(
        level=settings.LOG_LEVEL.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except DatapathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
