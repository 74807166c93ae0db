"""
端到端流程：parse → e-graph → saturate → extract → codegen → (verify)

    optimize   单个设计，返回 OptimizeResult（优化后的 Verilog、代价报告、证书）
    bench      跑整个基准目录，每个基准的失败单独记录，不影响其它基准
    sweep      按位宽重新生成 FIR 三抽头滤波器，看最优结构怎样随位宽变化
"""

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from engine.conditions import ConditionStore
from engine.config import RunConfig
from engine.corpus import corpus_files, fir3, overrides_for
from engine.cost_model import CostModel, adder_count, architecture_signature, cpa_count
from engine.egraph import EGraph, RunReport
from engine.errors import DatapathError
from engine.extraction import (
    ExtractionProblem,
    ExtractionResult,
    dag_terms,
    export_lp,
    greedy_extract,
    ilp_extract,
)
from engine.codegen import render_design
from engine.ir import Term
from engine.proof import ProofCertificate, VerificationReport, produce_proof, verify_chain
from engine.rules import builtin_ruleset
from engine.verilog_parser import DesignModule, parse_verilog

logger = logging.getLogger(__name__)


@dataclass
class OptimizeResult:
    """
    一次优化的全部产物

    Attributes:
        verilog: 优化后的模块文本；有证书时就是证书的最后一个模块
        cost_before / cost_after: 输入 / 输出的 DAG 代价
        greedy_cost: 贪心提取的 DAG 代价，用来和 ILP 对照
    """
    design: str
    verilog: str
    cost_before: int
    cost_after: int
    greedy_cost: int
    adders_before: int
    adders_after: int
    cpa_after: int
    signature: str
    init_nodes: int
    saturation: RunReport
    extraction: ExtractionResult
    certificate: Optional[ProofCertificate] = None
    verification: Optional[VerificationReport] = None
    timings: Dict[str, float] = field(default_factory=dict)
    # 输出名 → 提取出的项
    terms: Dict[str, Term] = field(default_factory=dict)

    @property
    def limit_hit(self) -> bool:
        return self.saturation.stop_reason != "saturated"

    @property
    def improved(self) -> bool:
        return self.cost_after < self.cost_before

    @property
    def exit_code(self) -> int:
        # 到达限制且没有任何改进仍算成功，只是退出码不同
        return 3 if self.limit_hit and not self.improved else 0

    @property
    def trajectory_non_monotone(self) -> bool:
        return self.certificate is not None and self.certificate.non_monotone

    def report(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "design": self.design,
            "cost_before": self.cost_before,
            "cost_after": self.cost_after,
            "greedy_cost": self.greedy_cost,
            "improved": self.improved,
            "adders_before": self.adders_before,
            "adders_after": self.adders_after,
            "cpa_after": self.cpa_after,
            "signature": self.signature,
            "init_nodes": self.init_nodes,
            "final_nodes": self.saturation.nodes,
            "final_classes": self.saturation.classes,
            "limit_hit": self.limit_hit,
            "saturation": self.saturation.to_dict(),
            "extraction": self.extraction.to_dict(),
            "timings": {k: round(v, 3) for k, v in self.timings.items()},
        }
        if self.certificate is not None:
            out["certificate"] = {
                "length": len(self.certificate),
                "rules": self.certificate.rules,
                "cost_trajectory": self.certificate.cost_trajectory,
                "non_monotone": self.trajectory_non_monotone,
            }
        if self.verification is not None:
            out["verification"] = self.verification.to_dict()
        return out


# ---------------------------------------------------------------------------
# 单个设计
# ---------------------------------------------------------------------------

def _preferred_names(eg: EGraph, design: DesignModule, terms_by_class: Dict[int, Term]) -> Dict[Term, str]:
    """原设计里的 wire 名尽量保留在优化后的对应子项上"""
    reserved = {n for n, _, _ in design.inputs} | {o for o, _ in design.outputs}
    out: Dict[Term, str] = {}
    for cid, t in terms_by_class.items():
        names = sorted(n for n in eg.data(cid).names if n not in reserved)
        if names and t not in out:
            out[t] = names[0]
    return out


def _extract(eg: EGraph, roots: List[int], config: RunConfig, cm: CostModel):
    greedy = greedy_extract(eg, roots, cm)
    if config.extract == "greedy":
        return greedy, greedy
    return ilp_extract(eg, roots, config.ilp_timeout, cm, config.ilp_solver), greedy


def optimize(text: str, config: Optional[RunConfig] = None,
             store: Optional[ConditionStore] = None) -> OptimizeResult:
    """
    优化一个 Verilog 模块

    Args:
        text: 模块源码
        config: 运行配置；output / emit_cert / dump_egraph 给出时写文件
        store: 条件库，缺省读 models/conditions.json

    Returns:
        OptimizeResult

    Raises:
        VerilogSyntaxError 等解析错误: 输入不在支持的子集里
        StepFailed: 证书某一步找到反例；此时不写优化结果，证书照常写出
        DatapathError: 其它各阶段的错误
    """
    config = config or RunConfig()
    store = store if store is not None else ConditionStore.load()
    cm = CostModel(config.cost)
    timings: Dict[str, float] = {}

    t0 = time.monotonic()
    design = parse_verilog(text)
    outputs = design.output_terms()
    timings["parse"] = time.monotonic() - t0

    eg = EGraph(design.input_widths())
    roots: Dict[str, int] = {}
    for o, _ in design.outputs:
        roots[o] = eg.add_term(outputs[o])
        eg.set_name(roots[o], o)
    for name, t in design.bindings:
        if name not in roots:
            eg.set_name(eg.add_term(t), name)
    init_nodes = eg.node_count
    logger.info("design %s: %s outputs, %s initial e-nodes", design.name, len(outputs), init_nodes)

    t0 = time.monotonic()
    rules = builtin_ruleset(**config.rule_options(), store=store)
    run = eg.run_saturation(rules, config.max_iters, config.max_nodes, config.time_limit)
    timings["saturate"] = time.monotonic() - t0
    logger.info("saturation stopped (%s) at %s nodes, %s classes",
                run.stop_reason, run.nodes, run.classes)
    if config.dump_egraph:
        _dump(eg, config.dump_egraph)

    t0 = time.monotonic()
    order = [roots[o] for o, _ in design.outputs]
    if config.export_lp:
        lp = Path(config.export_lp)
        lp.parent.mkdir(parents=True, exist_ok=True)
        lp.write_text(export_lp(ExtractionProblem.from_egraph(eg, order, cm)), encoding="utf-8")
        logger.info("wrote extraction LP to %s", lp)
    extraction, greedy = _extract(eg, order, config, cm)
    by_class = dag_terms(eg, order, extraction.choices)
    final = {o: by_class[eg.find(roots[o])] for o, _ in design.outputs}
    preferred = _preferred_names(eg, design, by_class)
    timings["extract"] = time.monotonic() - t0

    cert = None
    verification = None
    verilog = render_design(design, final, preferred)
    if config.verify or config.emit_cert:
        t0 = time.monotonic()
        cert = produce_proof(eg, design, roots, final, preferred, input_text=text, cost_model=cm)
        verilog = cert.final
        try:
            if config.verify:
                verification = verify_chain(cert, config.verify_budget, config.shrink_width, store=store)
        finally:
            if config.emit_cert:
                cert.write(config.emit_cert)
            timings["verify"] = time.monotonic() - t0

    if config.output:
        out = Path(config.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(verilog, encoding="utf-8")
        logger.info("wrote optimized RTL to %s", out)

    values = list(final.values())
    result = OptimizeResult(
        design=design.name,
        verilog=verilog,
        cost_before=cm.dag_cost(*outputs.values()),
        cost_after=cm.dag_cost(*values),
        greedy_cost=greedy.dag_cost,
        adders_before=adder_count(*outputs.values()),
        adders_after=adder_count(*values),
        cpa_after=cpa_count(*values),
        signature=architecture_signature(*values),
        init_nodes=init_nodes,
        saturation=run,
        extraction=extraction,
        certificate=cert,
        verification=verification,
        timings=timings,
        terms=final,
    )
    logger.info("%s: cost %s -> %s (%s)", design.name, result.cost_before, result.cost_after,
                extraction.status)
    return result


def optimize_file(path: Union[str, Path], config: Optional[RunConfig] = None,
                  store: Optional[ConditionStore] = None) -> OptimizeResult:
    return optimize(Path(path).read_text(encoding="utf-8"), config, store)


def _dump(eg: EGraph, path: str) -> None:
    if path.endswith(".dot"):
        Path(path).write_text(eg.to_dot(), encoding="utf-8")
    else:
        eg.dump_json(path)
    logger.info("dumped e-graph to %s", path)


# ---------------------------------------------------------------------------
# 基准
# ---------------------------------------------------------------------------

BENCH_COLUMNS = ("name", "init_nodes", "final_nodes", "extract", "status", "runtime",
                 "cost_before", "cost_after", "adders_after", "cert_len")


def _bench_config(config: RunConfig, path: Path) -> RunConfig:
    update = dict(overrides_for(path))
    update.update({"output": None, "emit_cert": None, "dump_egraph": None, "export_lp": None})
    return config.model_copy(update=update)


def bench_one(path: Union[str, Path], config: RunConfig,
              store: Optional[ConditionStore] = None) -> Dict[str, Any]:
    """跑一个基准，返回表格的一行；出错时 error 字段记录原因"""
    path = Path(path)
    row: Dict[str, Any] = {"name": path.stem, "extract": config.extract}
    start = time.monotonic()
    try:
        result = optimize_file(path, _bench_config(config, path), store)
    except DatapathError as exc:
        logger.error("benchmark %s failed: %s", path.stem, exc)
        row.update({"status": "failed", "error": str(exc)})
    else:
        rep = result.report()
        row.update({
            "init_nodes": result.init_nodes,
            "final_nodes": rep["final_nodes"],
            "stop_reason": result.saturation.stop_reason,
            "status": result.extraction.status,
            "ilp_timeout": result.extraction.status == "incumbent",
            "cost_before": result.cost_before,
            "cost_after": result.cost_after,
            "greedy_cost": result.greedy_cost,
            "adders_before": result.adders_before,
            "adders_after": result.adders_after,
            "signature": result.signature,
            "timings": rep["timings"],
            "cert_len": len(result.certificate) if result.certificate is not None else None,
            "non_monotone": result.trajectory_non_monotone,
        })
        if result.verification is not None:
            row["verified"] = result.verification.to_dict()
    row["runtime"] = round(time.monotonic() - start, 3)
    return row


def bench(corpus_dir: Optional[Union[str, Path]] = None, config: Optional[RunConfig] = None,
          store: Optional[ConditionStore] = None) -> List[Dict[str, Any]]:
    """
    按文件名顺序跑基准目录下的每个 .v

    Returns:
        每个基准一行；行里的 error 不为空表示该基准失败
    """
    config = config or RunConfig()
    store = store if store is not None else ConditionStore.load()
    files = corpus_files(corpus_dir)
    if not files:
        logger.warning("no benchmarks found in %s", corpus_dir)
    rows = [bench_one(f, config, store) for f in files]
    failed = sum(1 for r in rows if r.get("error"))
    logger.info("bench finished: %s benchmarks, %s failed", len(rows), failed)
    return rows


def format_table(rows: Sequence[Dict[str, Any]], columns: Sequence[str] = BENCH_COLUMNS) -> str:
    cells = [[str(c) for c in columns]]
    for r in rows:
        line = []
        for c in columns:
            v = r.get(c)
            if c == "status" and r.get("ilp_timeout"):
                v = f"{v}*"
            line.append("-" if v is None else str(v))
        cells.append(line)
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    lines = ["  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    if any(r.get("ilp_timeout") for r in rows):
        lines.append("* ILP timed out, incumbent reported")
    return "\n".join(lines) + "\n"


def write_bench(rows: Sequence[Dict[str, Any]], directory: Union[str, Path]) -> Path:
    """bench.json + bench.txt"""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "bench.json", "w", encoding="utf-8") as f:
        json.dump(list(rows), f, indent=2)
    (d / "bench.txt").write_text(format_table(rows), encoding="utf-8")
    return d


# ---------------------------------------------------------------------------
# 位宽扫描
# ---------------------------------------------------------------------------

def sweep(widths: Sequence[int], config: Optional[RunConfig] = None,
          store: Optional[ConditionStore] = None) -> List[Dict[str, Any]]:
    """
    对每个位宽生成 FIR 三抽头并优化（不验证），记录代价与结构

    Returns:
        [{width, cost_before, cost_after, cpa, adders, signature, status}]
    """
    config = (config or RunConfig()).model_copy(
        update={"verify": False, "output": None, "emit_cert": None, "dump_egraph": None, "export_lp": None})
    store = store if store is not None else ConditionStore.load()
    rows = []
    for w in widths:
        result = optimize(fir3(w), config, store)
        rows.append({
            "width": w,
            "cost_before": result.cost_before,
            "cost_after": result.cost_after,
            "cpa": result.cpa_after,
            "adders": result.adders_after,
            "signature": result.signature,
            "status": result.extraction.status,
        })
        logger.info("sweep width %s: %s (cost %s)", w, result.signature, result.cost_after)
    return rows


def transitions(rows: Sequence[Dict[str, Any]]) -> List[int]:
    """结构发生变化的位宽"""
    return [rows[i]["width"] for i in range(1, len(rows))
            if rows[i]["signature"] != rows[i - 1]["signature"]]
