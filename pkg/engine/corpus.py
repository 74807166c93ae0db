"""
基准电路库

bench/ 下的 .v 文件是固定的基准；同名的 .json（可选）是该基准的 RunConfig 覆盖项，
例如 MCM 只开 arith / constexp 两类并收紧迭代上限。FIR 三抽头滤波器按位宽现场生成，供 sweep 使用。
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

logger = logging.getLogger(__name__)

BENCH_DIR = Path(__file__).resolve().parent.parent / "bench"


def fir3(width: int) -> str:
    """
    三抽头 FIR：y = a0·x0 + a1·x1 + a2·x2，系数是输入

    Args:
        width: 样本与系数的位宽；输出 2·width + 2 位，保证不溢出

    Raises:
        ValueError: width < 1
    """
    if width < 1:
        raise ValueError(f"FIR width must be positive, got {width}")
    hi = width - 1
    out = 2 * width + 1
    ports = [f"  input [{hi}:0] {p}," for p in ("x0", "x1", "x2", "a0", "a1", "a2")]
    return "\n".join([
        f"module fir3_w{width} (",
        *ports,
        f"  output [{out}:0] y",
        ");",
        "  assign y = a0 * x0 + a1 * x1 + a2 * x2;",
        "endmodule",
        "",
    ])


def mcm(coeffs: Sequence[int], width: int = 8) -> str:
    """同一个输入乘若干常数，每个乘积一个 2·width 位输出"""
    if not coeffs:
        raise ValueError("MCM needs at least one coefficient")
    name = "mcm_" + "_".join(str(c) for c in coeffs)
    cw = max(max(int(c).bit_length() for c in coeffs), 1)
    lines = [f"module {name} (", f"  input [{width - 1}:0] x,"]
    outs = [f"  output [{2 * width - 1}:0] y{c}" for c in coeffs]
    lines.append(",\n".join(outs))
    lines.append(");")
    for c in coeffs:
        lines.append(f"  assign y{c} = x * {cw}'d{c};")
    lines.append("endmodule")
    lines.append("")
    return "\n".join(lines)


def corpus_files(directory: Optional[Union[str, Path]] = None) -> List[Path]:
    d = Path(directory) if directory is not None else BENCH_DIR
    return sorted(d.glob("*.v"))


def overrides_for(path: Union[str, Path]) -> Dict[str, Any]:
    """读取与 .v 同名的 .json 覆盖项；没有就返回空字典"""
    side = Path(path).with_suffix(".json")
    if not side.exists():
        return {}
    with open(side, "r", encoding="utf-8") as f:
        data = json.load(f)
    logger.debug("config overrides for %s: %s", Path(path).name, data)
    return data
