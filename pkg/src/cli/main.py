"""
随机场 Potts 工具箱命令行

退出码：0 成功，1 用法错误（用法说明写到 stderr），2 运行时错误。
结果 JSON 打印到 stdout；给出 --out 时所有文件原子写入，并附带 manifest.json。
"""
import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from src.core.exceptions import PlotError, RFPMError
from src.core.field import sample_field
from src.core.gla import (
    anneal_gla, exact_gla, greedy_gla, mean_and_stderr, sample_gla_scores, sub_box_family,
    tail_from_scores
)
from src.core.polygon import run_construction
from src.core.potts import (
    energy, exact_gibbs, ground_state, heat_bath_sweep, magnetization_records,
    summarize_magnetization
)
from src.core.scaling import (
    correlation_length, fit_power_exponent, imry_ma_length, theorem1_experiment,
    theorem2_experiment
)
from src.data.models.field import FieldConvention, FieldRealization
from src.data.models.lattice import ORIGIN, BoxSpec
from src.data.models.manifest import DEFAULT_INTERPRETATION, ExperimentConfig, RunManifest
from src.data.models.params import (
    GLA_METHODS, GROUND_STATE_METHODS, NUMERATORS, THERMAL_METHODS, AnnealSchedule,
    MonteCarloParams, OptimizerSpec, SearchParams, StatsParams
)
from src.data.models.results import GlaResult, ScalingSeries
from src.data.models.spin import BoundaryCondition, GibbsParams, SpinConfig
from src.data.repositories.animal_repo import write_animals
from src.data.repositories.field_repo import load_field, save_field
from src.data.repositories.output_repo import (
    read_csv, read_json, render_json, write_csv, write_json
)
from src.data.repositories.plot_repo import emit_plot_data, emit_polygon_svg
from src.data.repositories.polygon_repo import write_trace, write_vertices
from src.data.repositories.spin_repo import write_snapshot
from src.utils.config import get_settings
from src.utils.logger import setup_logger
from src.utils.rng import STREAM_HEAT_BATH, counter_stream

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    """命令行用法错误；reported 表示用法说明已经打印过"""

    def __init__(self, message: str, reported: bool = False):
        super().__init__(message)
        self.reported = reported


class CliParser(argparse.ArgumentParser):
    """用法错误时抛异常而不是直接退出，由 main 统一给出退出码 1"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: 错误: {message}\n")
        raise UsageError(message, reported=True)


def int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"需要逗号分隔的整数: {text!r}")


def float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"需要逗号分隔的实数: {text!r}")


# ---------------------------------------------------------------------------
# 参数组
# ---------------------------------------------------------------------------

def _common_options() -> argparse.ArgumentParser:
    common = CliParser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help="并行线程数（默认取 RFPM_THREADS）")
    common.add_argument("--log-level", default=None, help="日志级别，例如 DEBUG")
    common.add_argument("--out", default=None, help="输出目录")
    return common


def _add_field_source(parser: argparse.ArgumentParser, from_file: bool = True) -> None:
    if from_file:
        parser.add_argument("--field", default=None, help="读取已有的场文件")
    parser.add_argument("--N", type=int, default=None, help="盒子半边长")
    parser.add_argument("--q", type=int, default=None, help="颜色数")
    parser.add_argument("--eps", type=float, default=None, help="场强 ε")
    parser.add_argument("--seed", type=int, default=None, help="随机种子")
    parser.add_argument("--conv", choices=[c.value for c in FieldConvention], default="unit",
                        help="场的方差约定")


def _add_optimizer(parser: argparse.ArgumentParser, method: str, max_size: Optional[int]) -> None:
    parser.add_argument("--method", choices=GLA_METHODS, default=method, help="GLA 优化方法")
    parser.add_argument("--max-size", type=int, default=max_size, help="动物格点数上限")
    parser.add_argument("--numerator", choices=NUMERATORS, default="all_colors",
                        help="分子：全部颜色之和或单色最大")
    parser.add_argument("--steps", type=int, default=10_000, help="贪婪法最大步数")
    parser.add_argument("--T0", type=float, default=2.0, help="退火初始温度")
    parser.add_argument("--Tend", type=float, default=0.01, help="退火终止温度")
    parser.add_argument("--schedule-sweeps", type=int, default=200, help="退火轮数")
    parser.add_argument("--moves", type=int, default=64, help="每轮移动次数")


def _add_monte_carlo(parser: argparse.ArgumentParser, ground_state_method: str) -> None:
    parser.add_argument("--thermal", choices=THERMAL_METHODS, default="heat_bath",
                        help="β 有限时的期望计算方法")
    parser.add_argument("--ground-state-method", choices=GROUND_STATE_METHODS,
                        default=ground_state_method, help="β = ∞ 时的基态方法")
    parser.add_argument("--burn-in", type=int, default=200, help="热浴预热扫描数")
    parser.add_argument("--sweeps", type=int, default=2000, help="热浴测量扫描数")
    parser.add_argument("--gs-sweeps", type=int, default=300, help="基态退火扫描数")
    parser.add_argument("--beta0", type=float, default=0.2, help="基态退火初始 β")
    parser.add_argument("--beta1", type=float, default=8.0, help="基态退火终止 β")


def _add_search(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--threshold", type=float, default=None, help="磁化强度阈值")
    parser.add_argument("--beta", type=float, default=math.inf, help="逆温度，inf 表示基态")
    parser.add_argument("--N-start", dest="N_start", type=int, default=1, help="搜索起点")
    parser.add_argument("--N-max", dest="N_max", type=int, default=32, help="搜索上限")
    parser.add_argument("--factor", type=int, default=2, help="倍增因子")
    parser.add_argument("--samples", type=int, default=100, help="无序样本数")


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="rfpm", description="二维随机场 Potts 模型工具箱")
    parser.add_argument("--version", action="version", version=get_settings().version)
    subparsers = parser.add_subparsers(dest="command", parser_class=CliParser)
    common = _common_options()

    def command(name: str, handler: Callable, help_text: str) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(name, parents=[common], help=help_text)
        sub.set_defaults(handler=handler)
        return sub

    p = command("field-gen", cmd_field_gen, "生成随机场文件")
    _add_field_source(p, from_file=False)

    p = command("gla-exact", cmd_gla_exact, "穷举求 GLA")
    _add_field_source(p)
    p.add_argument("--max-size", type=int, default=8, help="动物格点数上限")
    p.add_argument("--sub-box", type=int, default=None, help="只考虑 Λ_n 内的动物")
    p.add_argument("--numerator", choices=NUMERATORS, default="all_colors", help="分子类型")

    p = command("gla-heur", cmd_gla_heur, "贪婪或退火求 GLA")
    _add_field_source(p)
    _add_optimizer(p, "anneal", None)

    p = command("gla-scan", cmd_gla_scan, "多个无序样本上的 GLA")
    _add_field_source(p, from_file=False)
    _add_optimizer(p, "anneal", None)
    p.add_argument("--samples", type=int, default=100, help="无序样本数")

    p = command("tail", cmd_tail, "GLA 尾概率估计")
    _add_field_source(p, from_file=False)
    _add_optimizer(p, "anneal", None)
    p.add_argument("--samples", type=int, default=1000, help="无序样本数")
    p.add_argument("--u", type=float_list, default=[1.0, 2.0, 3.0], help="阈值列表")

    p = command("polygon", cmd_polygon, "多边形生长构造")
    _add_field_source(p)
    p.add_argument("--levels", type=int, default=4, help="最大层数")
    p.add_argument("--variant", choices=("deterministic", "stochastic"), default="deterministic",
                   help="接受规则")

    p = command("gibbs-exact", cmd_gibbs_exact, "小盒子上的精确 Gibbs 分布")
    _add_field_source(p)
    p.add_argument("--beta", type=float, required=True, help="逆温度")
    p.add_argument("--bc", default="free", help="边界条件：free 或 wired(c)")

    p = command("mc", cmd_mc, "热浴 Monte Carlo")
    _add_field_source(p)
    p.add_argument("--beta", type=float, required=True, help="逆温度")
    p.add_argument("--bc", default="free", help="边界条件：free 或 wired(c)")
    p.add_argument("--burn-in", type=int, default=200, help="预热扫描数")
    p.add_argument("--sweeps", type=int, default=2000, help="测量扫描数")

    p = command("ground-state", cmd_ground_state, "β = ∞ 的基态")
    _add_field_source(p)
    p.add_argument("--bc", default="free", help="边界条件：free 或 wired(c)")
    p.add_argument("--method", choices=GROUND_STATE_METHODS, default="exhaustive",
                   help="基态方法")
    p.add_argument("--gs-sweeps", type=int, default=300, help="退火扫描数")
    p.add_argument("--beta0", type=float, default=0.2, help="退火初始 β")
    p.add_argument("--beta1", type=float, default=8.0, help="退火终止 β")

    p = command("magnetization", cmd_magnetization, "自发磁化强度的无序平均")
    _add_field_source(p, from_file=False)
    _add_monte_carlo(p, "anneal")
    p.add_argument("--beta", type=float, default=math.inf, help="逆温度，inf 表示基态")
    p.add_argument("--samples", type=int, default=100, help="无序样本数")
    p.add_argument("--with-gla", action="store_true", help="同时报告每个样本的贪婪 GLA 得分")

    p = command("corrlen", cmd_corrlen, "关联长度搜索")
    p.add_argument("--eps", type=float, required=True, help="场强 ε")
    p.add_argument("--q", type=int, default=3, help="颜色数")
    p.add_argument("--seed", type=int, default=1, help="起始种子")
    p.add_argument("--conv", choices=[c.value for c in FieldConvention], default="unit")
    _add_search(p)
    _add_monte_carlo(p, "anneal")

    p = command("thm2", cmd_thm2, "E[G_N] 的标度实验")
    p.add_argument("--config", default=None, help="JSON 实验配置")
    p.add_argument("--N", type=int_list, default=None, help="逗号分隔的 N 列表")
    p.add_argument("--q", type=int, default=2, help="颜色数")
    p.add_argument("--eps", type=float, default=1.0, help="场强 ε")
    p.add_argument("--conv", choices=[c.value for c in FieldConvention], default="unit")
    p.add_argument("--samples", type=int, default=100, help="每个 N 的无序样本数")
    p.add_argument("--seed", type=int, default=1, help="起始种子")
    _add_optimizer(p, "anneal", None)

    p = command("thm1", cmd_thm1, "关联长度随 ε 的标度实验")
    p.add_argument("--config", default=None, help="JSON 实验配置")
    p.add_argument("--eps", type=float_list, default=None, help="逗号分隔的 ε 列表")
    p.add_argument("--q", type=int, default=3, help="颜色数")
    p.add_argument("--seed", type=int, default=1, help="起始种子")
    p.add_argument("--conv", choices=[c.value for c in FieldConvention], default="unit")
    _add_search(p)
    _add_monte_carlo(p, "anneal")

    p = command("fit", cmd_fit, "对已有序列做幂律拟合")
    p.add_argument("--series", required=True, help="含 x,y,yerr 列的 CSV")
    p.add_argument("--x-map", choices=("identity", "log", "loglog", "inv_log"), default="log")
    p.add_argument("--y-map", choices=("identity", "log", "loglog", "inv_log"), default="log")

    p = command("rerun", cmd_rerun, "按清单重跑")
    p.add_argument("--manifest", required=True, help="manifest.json 或内嵌清单的结果文件")

    return parser


# ---------------------------------------------------------------------------
# 清单与输出
# ---------------------------------------------------------------------------

RECORDED_EXCLUDE = {"handler", "out", "threads", "log_level"}


def _strip_option(argv: Sequence[str], option: str) -> List[str]:
    """去掉 argv 里的某个选项及其取值"""
    stripped, skip = [], False
    for token in argv:
        if skip:
            skip = False
            continue
        if token == option:
            skip = True
            continue
        if token.startswith(option + "="):
            continue
        stripped.append(token)
    return stripped


def make_manifest(args: argparse.Namespace, argv: Sequence[str]) -> RunManifest:
    """输出目录、线程数和日志级别不影响结果，不写进清单"""
    parameters = {k: v for k, v in vars(args).items() if k not in RECORDED_EXCLUDE}
    flags = dict(DEFAULT_INTERPRETATION)
    if getattr(args, "conv", None):
        flags["field_convention"] = args.conv
    recorded = argv
    for option in ("--out", "--threads", "--log-level"):
        recorded = _strip_option(recorded, option)
    return RunManifest(command=args.command, parameters=parameters, argv=list(recorded),
                       interpretation_flags=flags, tool_version=get_settings().version)


class OutputSet:
    """一次运行的输出：JSON 内嵌清单，目录下另写 manifest.json 列出所有文件"""

    def __init__(self, out: Optional[str], manifest: RunManifest):
        self.directory = Path(out) if out else None
        self.manifest = manifest
        self.files: List[Path] = []

    @property
    def enabled(self) -> bool:
        return self.directory is not None

    def path(self, name: str) -> Path:
        return self.directory / name

    def csv(self, name: str, header: Sequence[str], rows) -> None:
        if self.enabled:
            self.files.append(write_csv(self.path(name), header, rows))

    def json(self, name: str, payload: Dict[str, Any]) -> None:
        if self.enabled:
            body = dict(payload)
            body["manifest"] = self.manifest.model_dump()
            self.files.append(write_json(self.path(name), body))

    def add(self, paths) -> None:
        self.files.extend(paths if isinstance(paths, list) else [paths])

    @property
    def description(self) -> str:
        return render_json(self.manifest.without_timestamp())

    def close(self) -> None:
        if self.enabled:
            names = sorted(p.name for p in self.files)
            payload = self.manifest.model_copy(update={"outputs": names}).model_dump()
            write_json(self.path("manifest.json"), payload)


# ---------------------------------------------------------------------------
# 公共构造
# ---------------------------------------------------------------------------

def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError(f"缺少参数: {', '.join(missing)}")


def _field(args: argparse.Namespace) -> FieldRealization:
    if getattr(args, "field", None):
        return load_field(args.field)
    _require(args, "N", "q", "eps", "seed")
    return sample_field(BoxSpec(args.N), args.q, args.eps, args.seed, FieldConvention(args.conv))


def _optimizer(args: argparse.Namespace) -> OptimizerSpec:
    schedule = AnnealSchedule(args.T0, args.Tend, args.schedule_sweeps, args.moves)
    return OptimizerSpec(args.method, args.max_size, args.steps, schedule, args.numerator)


def _mc_params(args: argparse.Namespace) -> MonteCarloParams:
    return MonteCarloParams(args.thermal, args.ground_state_method, args.burn_in, args.sweeps,
                            args.gs_sweeps, args.beta0, args.beta1)


def _gla_payload(result: GlaResult) -> Dict[str, Any]:
    return {
        "score": result.score,
        "method": result.method,
        "evaluations": result.evaluations,
        "size": result.animal.size,
        "boundary": result.animal.boundary_size,
        "sites": [list(s) for s in result.animal.sites],
    }


def _series_rows(series: ScalingSeries):
    return [[p.x, p.y, p.yerr] for p in series.points]


def _fit_payload(result) -> Dict[str, Any]:
    fit = result.fit
    return {
        "fit": None if fit is None else {
            "slope": fit.slope, "intercept": fit.intercept, "stderr_slope": fit.stderr_slope,
            "residuals": list(fit.residuals), "x_map": fit.x_map, "y_map": fit.y_map,
            "weighted": fit.weighted,
        },
        "fit_error": result.fit_error,
        "series": _series_rows(result.series),
        "transform": result.series.transform,
        "provenance": result.provenance,
        "excluded": result.excluded,
    }


# ---------------------------------------------------------------------------
# 子命令
# ---------------------------------------------------------------------------

def cmd_field_gen(args, output: OutputSet) -> Dict[str, Any]:
    _require(args, "N", "q", "eps", "seed", "out")
    field = _field(args)
    path = save_field(field, args.out)
    sidecar = path.with_name(path.name + ".manifest.json")
    write_json(sidecar, output.manifest.model_copy(update={"outputs": [path.name]}).model_dump())
    output.directory = None
    return {"path": str(path), "N": field.spec.N, "q": field.q, "seed": field.seed}


def cmd_gla_exact(args, output: OutputSet) -> Dict[str, Any]:
    field = _field(args)
    family = sub_box_family(args.sub_box) if args.sub_box is not None else None
    result = exact_gla(field, args.max_size, family, args.numerator)
    payload = _gla_payload(result)
    output.json("gla.json", payload)
    if output.enabled:
        output.add(write_animals(output.path("animal.txt"), [result.animal]))
    return payload


def cmd_gla_heur(args, output: OutputSet) -> Dict[str, Any]:
    field = _field(args)
    if args.method == "greedy":
        result = greedy_gla(field, ORIGIN, args.steps, args.max_size, args.numerator)
    elif args.method == "anneal":
        seed = args.seed if args.seed is not None else field.seed
        schedule = AnnealSchedule(args.T0, args.Tend, args.schedule_sweeps, args.moves)
        result = anneal_gla(field, schedule, seed, args.max_size, args.numerator)
    else:
        result = exact_gla(field, args.max_size or 8, numerator=args.numerator)
    payload = _gla_payload(result)
    output.json("gla.json", payload)
    if output.enabled:
        output.add(write_animals(output.path("animal.txt"), [result.animal]))
    return payload


def _scan(args) -> list:
    _require(args, "N", "q", "eps", "seed")
    return sample_gla_scores(BoxSpec(args.N), args.q, args.eps, FieldConvention(args.conv),
                             args.samples, _optimizer(args), args.seed, args.threads)


def _scan_rows(args, samples) -> list:
    return [[s.seed, args.N, args.q, args.eps, s.result.method, s.result.score,
             s.result.animal.size, s.result.animal.boundary_size, s.result.evaluations]
            for s in samples]


SCAN_HEADER = ["seed", "N", "q", "eps", "method", "score", "animal_size", "boundary",
               "evaluations"]


def cmd_gla_scan(args, output: OutputSet) -> Dict[str, Any]:
    samples = _scan(args)
    mean, stderr = mean_and_stderr([s.result.score for s in samples])
    output.csv("gla_scan.csv", SCAN_HEADER, _scan_rows(args, samples))
    payload = {"mean": mean, "stderr": stderr, "samples": len(samples)}
    output.json("summary.json", payload)
    return payload


def cmd_tail(args, output: OutputSet) -> Dict[str, Any]:
    samples = _scan(args)
    estimates = tail_from_scores([s.result.score for s in samples], args.u)
    rows = [[e.threshold, e.exceed_count, e.samples, e.fraction, e.bound, e.binomial_sigma,
             e.center] for e in estimates]
    output.csv("gla_scan.csv", SCAN_HEADER, _scan_rows(args, samples))
    output.csv("tail.csv", ["u", "exceed_count", "samples", "fraction", "bound",
                            "binomial_sigma", "center"], rows)
    payload = {"center": estimates[0].center if estimates else None,
               "tail": [{"u": e.threshold, "fraction": e.fraction, "bound": e.bound,
                         "binomial_sigma": e.binomial_sigma} for e in estimates]}
    output.json("tail.json", payload)
    return payload


def cmd_polygon(args, output: OutputSet) -> Dict[str, Any]:
    field = _field(args)
    seed = args.seed if args.seed is not None else field.seed
    levels = run_construction(field, field.epsilon, args.levels, args.variant, seed)
    payload = {"levels": [{"level": item.level, "side_count": item.side_count,
                           "area": item.area, "weight": item.weight,
                           "accepted": item.accepted} for item in levels]}
    if output.enabled:
        output.add(write_trace(levels, output.path("trace.txt")))
        output.add(write_vertices(levels, output.path("vertices.csv")))
        output.add(emit_polygon_svg(levels, output.path("polygon.svg"), output.description))
    output.json("polygon.json", payload)
    return payload


def cmd_gibbs_exact(args, output: OutputSet) -> Dict[str, Any]:
    field = _field(args)
    bc = BoundaryCondition.parse(args.bc)
    table = exact_gibbs(field.spec, field.q, field, GibbsParams(args.beta, field.epsilon), bc)
    origin = field.spec.site_count // 2
    output.csv("gibbs.csv", ["index", "spins", "energy", "probability"],
               ([i, "".join(str(int(s)) for s in row), table.energies[i], table.probabilities[i]]
                for i, row in enumerate(table.configs)))
    payload = {"states": len(table), "origin_marginal": table.marginal(origin).tolist(),
               "expected_energy": table.expected_energy,
               "most_probable": "".join(str(int(s)) for s in table.most_probable())}
    output.json("gibbs.json", payload)
    return payload


def cmd_mc(args, output: OutputSet) -> Dict[str, Any]:
    field = _field(args)
    bc = BoundaryCondition.parse(args.bc)
    params = GibbsParams(args.beta, field.epsilon)
    seed = args.seed if args.seed is not None else field.seed
    rng = counter_stream(seed, STREAM_HEAT_BATH)
    start = bc.color if bc.is_wired else 0
    config = SpinConfig.constant(field.spec, field.q, start, bc)
    for _ in range(args.burn_in):
        config = heat_bath_sweep(config, field, params, rng)

    counts = np.zeros(field.q, dtype=np.int64)
    energy_sum = 0.0
    for _ in range(args.sweeps):
        config = heat_bath_sweep(config, field, params, rng)
        counts[config.origin_spin] += 1
        energy_sum += energy(config, field, field.epsilon)
    payload = {"origin_distribution": (counts / max(args.sweeps, 1)).tolist(),
               "mean_energy": energy_sum / max(args.sweeps, 1), "sweeps": args.sweeps}
    if output.enabled:
        output.add(write_snapshot(config, output.path("spins.txt")))
    output.json("mc.json", payload)
    return payload


def cmd_ground_state(args, output: OutputSet) -> Dict[str, Any]:
    field = _field(args)
    bc = BoundaryCondition.parse(args.bc)
    params = MonteCarloParams(ground_state_method=args.method, anneal_sweeps=args.gs_sweeps,
                              anneal_beta0=args.beta0, anneal_beta1=args.beta1)
    seed = args.seed if args.seed is not None else field.seed
    config, value = ground_state(field.spec, field.q, field, field.epsilon, bc, args.method,
                                 seed, params)
    payload = {"energy": value, "origin_spin": config.origin_spin, "spins": config.digits()}
    if output.enabled:
        output.add(write_snapshot(config, output.path("ground_state.txt")))
    output.json("ground_state.json", payload)
    return payload


MAGNETIZATION_HEADER = ["seed", "N", "q", "eps", "beta", "bc", "p0_wired", "p0_free",
                        "energy_w", "energy_f"]


def cmd_magnetization(args, output: OutputSet) -> Dict[str, Any]:
    _require(args, "N", "q", "eps", "seed")
    records = magnetization_records(BoxSpec(args.N), args.q, args.eps, args.beta, args.samples,
                                    _mc_params(args), args.seed, FieldConvention(args.conv),
                                    args.threads, with_gla=args.with_gla)
    m, stderr = summarize_magnetization(records)
    header = list(MAGNETIZATION_HEADER)
    if args.with_gla:
        header += ["gla_score", "gla_indicator"]
    rows = []
    for r in records:
        row = [r.seed, r.N, r.q, r.epsilon, r.beta, r.bc, r.p0_wired, r.p0_free,
               r.energy_w, r.energy_f]
        if args.with_gla:
            row += [r.gla_score, r.gla_indicator]
        rows.append(row)
    output.csv("magnetization.csv", header, rows)
    payload = {"m": m, "stderr": stderr, "samples": len(records)}
    output.json("magnetization.json", payload)
    return payload


def _search(args) -> SearchParams:
    return SearchParams(args.N_start, args.N_max, args.factor)


def _threshold(args) -> float:
    return args.threshold if args.threshold is not None else get_settings().default_threshold


def cmd_corrlen(args, output: OutputSet) -> Dict[str, Any]:
    result = correlation_length(args.eps, args.q, _threshold(args), args.beta, _search(args),
                                StatsParams(args.samples, args.seed), _mc_params(args),
                                FieldConvention(args.conv), args.threads)
    output.csv("evaluations.csv", ["N", "m", "stderr"], result.evaluations)
    payload = {"epsilon": result.epsilon, "threshold": result.threshold, "found": result.found,
               "L": result.L, "bracket": list(result.bracket), "m_at_L": result.m_at_L,
               "imry_ma_length": imry_ma_length(result.epsilon)}
    output.json("corrlen.json", payload)
    return payload


def _emit_plot(output: OutputSet, result, x_map: str, y_map: str) -> None:
    if not output.enabled or len(result.series) == 0:
        return
    try:
        output.add(emit_plot_data(result.series, result.fit, output.path("plot"), x_map, y_map,
                                  output.description))
    except PlotError as e:
        logger.warning(f"跳过绘图: {e}")


def cmd_thm2(args, output: OutputSet) -> Dict[str, Any]:
    _require(args, "N")
    result = theorem2_experiment(args.N, args.q, args.eps, FieldConvention(args.conv),
                                 _optimizer(args), args.samples, args.seed, args.threads)
    output.csv("series.csv", ["N", "mean", "stderr"], _series_rows(result.series))
    payload = _fit_payload(result)
    output.json("fit.json", payload)
    _emit_plot(output, result, "loglog", "log")
    return payload


def cmd_thm1(args, output: OutputSet) -> Dict[str, Any]:
    _require(args, "eps")
    result, lengths = theorem1_experiment(args.eps, args.q, _threshold(args), args.beta,
                                          _search(args), StatsParams(args.samples, args.seed),
                                          _mc_params(args), FieldConvention(args.conv),
                                          args.threads)
    rows = [[r.epsilon, r.found, r.L, r.bracket[0], r.bracket[1], r.m_at_L,
             imry_ma_length(r.epsilon)] for r in lengths]
    output.csv("lengths.csv", ["eps", "found", "L", "bracket_low", "bracket_high", "m_at_L",
                               "imry_ma_length"], rows)
    output.csv("series.csv", ["inv_eps", "L", "stderr"], _series_rows(result.series))
    payload = _fit_payload(result)
    output.json("fit.json", payload)
    _emit_plot(output, result, "log", "loglog")
    return payload


def cmd_fit(args, output: OutputSet) -> Dict[str, Any]:
    rows = read_csv(args.series)
    try:
        series = ScalingSeries.from_arrays([float(r["x"]) for r in rows],
                                           [float(r["y"]) for r in rows],
                                           [float(r.get("yerr") or 0.0) for r in rows])
    except (KeyError, ValueError) as e:
        raise UsageError(f"序列文件需要 x,y,yerr 列: {e}")
    fit = fit_power_exponent(series, args.x_map, args.y_map)
    payload = {"slope": fit.slope, "intercept": fit.intercept, "stderr_slope": fit.stderr_slope,
               "residuals": list(fit.residuals), "x_map": fit.x_map, "y_map": fit.y_map,
               "weighted": fit.weighted}
    output.json("fit.json", payload)
    if output.enabled:
        output.add(emit_plot_data(series, fit, output.path("plot"), description=output.description))
    return payload


def cmd_rerun(args, output: OutputSet) -> Dict[str, Any]:
    recorded = read_json(args.manifest)
    manifest = RunManifest.model_validate(recorded.get("manifest", recorded))
    argv = list(manifest.argv)
    if args.out:
        argv += ["--out", args.out]
    if args.threads:
        argv += ["--threads", str(args.threads)]
    output.directory = None
    logger.info(f"按清单重跑: {manifest.command}")
    code = main(argv)
    if code != EXIT_OK:
        raise RFPMError(f"重跑 {manifest.command} 失败，退出码 {code}")
    return {"rerun": manifest.command, "argv": argv}


# ---------------------------------------------------------------------------
# 入口
# ---------------------------------------------------------------------------

def _parse(parser: argparse.ArgumentParser, argv: List[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        config = ExperimentConfig.model_validate(read_json(args.config))
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        subparsers.choices[args.command].set_defaults(**config.cli_defaults(args.command))
        args = parser.parse_args(argv)
    return args


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _parse(parser, argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        setup_logger("src", args.log_level)
        output = OutputSet(args.out, make_manifest(args, argv))
        payload = args.handler(args, output)
        output.close()
    except UsageError as e:
        if not e.reported:
            parser.print_usage(sys.stderr)
            sys.stderr.write(f"错误: {e}\n")
        return EXIT_USAGE
    except SystemExit as e:
        # --help / --version
        return int(e.code or 0)
    except (RFPMError, OSError, ValidationError) as e:
        logger.error(f"运行失败: {e}")
        sys.stderr.write(f"错误: {e}\n")
        return EXIT_RUNTIME

    sys.stdout.write(render_json(payload))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
