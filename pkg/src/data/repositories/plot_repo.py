"""
绘图数据输出：变换后坐标的 CSV 和 SVG 图

只写文件，不做交互显示。SVG 去掉日期并固定 id 盐值，
同样的输入得到逐字节相同的文件。
"""
import io
import logging
from pathlib import Path
from typing import List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from src.core.exceptions import FitError, PlotError  # noqa: E402
from src.core.scaling import transform_point  # noqa: E402
from src.data.models.polygon import PolygonLevel  # noqa: E402
from src.data.models.results import FitResult, ScalingSeries  # noqa: E402
from src.data.repositories.output_repo import PathLike, atomic_write_text, write_csv  # noqa: E402

logger = logging.getLogger(__name__)

matplotlib.rcParams["svg.hashsalt"] = "rfpm"

PLOT_HEADER = ["x", "y", "yerr", "x_mapped", "y_mapped", "yerr_mapped", "y_fit", "residual"]


def _render_svg(fig, description: Optional[str]) -> str:
    buffer = io.StringIO()
    metadata = {"Date": None}
    if description:
        metadata["Description"] = description
    fig.savefig(buffer, format="svg", metadata=metadata)
    plt.close(fig)
    return buffer.getvalue()


def emit_plot_data(series: ScalingSeries, fit: Optional[FitResult], path: PathLike,
                   x_map: str = "log", y_map: str = "log",
                   description: Optional[str] = None) -> List[Path]:
    """写出 <path>.csv 和 <path>.svg；有拟合时使用拟合的坐标变换"""
    if len(series) == 0:
        raise PlotError("序列为空，没有可以绘制的点")
    if fit is not None:
        x_map, y_map = fit.x_map, fit.y_map

    try:
        mapped = np.array([transform_point(p, x_map, y_map) for p in series.points])
    except FitError as e:
        raise PlotError(f"无法变换绘图坐标: {e}") from e
    xs, ys, sigmas = mapped[:, 0], mapped[:, 1], mapped[:, 2]
    fitted = fit.slope * xs + fit.intercept if fit is not None else None

    rows = []
    for i, point in enumerate(series.points):
        rows.append([point.x, point.y, point.yerr, xs[i], ys[i], sigmas[i],
                     fitted[i] if fitted is not None else None,
                     fit.residuals[i] if fit is not None else None])

    stem = Path(path)
    csv_path = write_csv(stem.with_suffix(".csv"), PLOT_HEADER, rows)

    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.errorbar(xs, ys, yerr=sigmas, fmt="o", color="black", ms=5, capsize=2, label="data")
    if fit is not None:
        grid = np.linspace(xs.min(), xs.max(), 50)
        ax.plot(grid, fit.slope * grid + fit.intercept, color="tab:red", lw=1.5,
                label=f"slope = {fit.slope:.4g} ± {fit.stderr_slope:.2g}")
    ax.set_xlabel(f"{x_map}(x)")
    ax.set_ylabel(f"{y_map}(y)")
    ax.grid(alpha=0.3, ls=":")
    ax.legend(frameon=False)
    fig.tight_layout()
    svg_path = atomic_write_text(stem.with_suffix(".svg"), _render_svg(fig, description))

    logger.info(f"已输出绘图数据: {csv_path}, {svg_path}")
    return [csv_path, svg_path]


def emit_polygon_svg(levels: Sequence[PolygonLevel], path: PathLike,
                     description: Optional[str] = None) -> Path:
    """各层多边形的轮廓，最后一层填充"""
    if not levels:
        raise PlotError("没有可以绘制的多边形")
    N = levels[-1].polygon.N

    fig, ax = plt.subplots(figsize=(6, 6))
    ax.plot([-N, N, N, -N, -N], [-N, -N, N, N, -N], color="gray", lw=0.8, ls="--")
    for item in levels[:-1]:
        xs, ys = zip(*(item.polygon.vertices + item.polygon.vertices[:1]))
        ax.plot(xs, ys, lw=0.6, alpha=0.6, label=f"P_{item.level}")
    last = levels[-1].polygon
    xs, ys = zip(*(last.vertices + last.vertices[:1]))
    ax.fill(xs, ys, alpha=0.3, color="tab:blue")
    ax.plot(xs, ys, lw=1.0, color="tab:blue", label=f"P_{last.level}")
    ax.set_aspect("equal")
    ax.set_xlim(-N, N)
    ax.set_ylim(-N, N)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return atomic_write_text(path, _render_svg(fig, description))
