"""运行清单与实验配置（pydantic 模型）"""
from datetime import datetime, timezone
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from src.core.exceptions import ParameterError

# 场的颜色下标范围与场作用位置的解读，写进每个输出
DEFAULT_INTERPRETATION = {
    "color_range": "0..q-1",
    "boundary_field": "all_sites",
    "hamiltonian_beta": "single_beta_in_gibbs_weight",
}


class RunManifest(BaseModel):
    """一次命令行运行的完整记录，足以逐位重跑"""
    command: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
    argv: List[str] = Field(default_factory=list)
    interpretation_flags: Dict[str, str] = Field(default_factory=dict)
    tool_version: str
    timestamp: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    outputs: List[str] = Field(default_factory=list)

    def without_timestamp(self) -> Dict[str, Any]:
        payload = self.model_dump()
        payload.pop("timestamp")
        return payload


class ExperimentConfig(BaseModel):
    """thm1 / thm2 的 JSON 配置文件；字段名与命令行参数一致，显式给出的参数优先"""
    model_config = ConfigDict(extra="forbid")

    N: Optional[List[int]] = None
    eps: Optional[Union[float, List[float]]] = None
    q: Optional[int] = Field(None, ge=2)
    conv: Optional[Literal["unit", "literal"]] = None
    samples: Optional[int] = Field(None, ge=2)
    seed: Optional[int] = Field(None, ge=0)
    method: Optional[Literal["exact", "greedy", "anneal"]] = None
    max_size: Optional[int] = Field(None, ge=1)
    threshold: Optional[float] = Field(None, gt=0, lt=1)
    beta: Optional[float] = Field(None, gt=0)
    N_start: Optional[int] = Field(None, ge=1)
    N_max: Optional[int] = Field(None, ge=1)
    factor: Optional[int] = Field(None, ge=2)
    ground_state_method: Optional[Literal["exhaustive", "anneal", "icm"]] = None
    thermal: Optional[Literal["heat_bath", "exact"]] = None
    burn_in: Optional[int] = Field(None, ge=0)
    sweeps: Optional[int] = Field(None, ge=1)

    def cli_defaults(self, command: str) -> Dict[str, Any]:
        """转换成对应子命令的 argparse 默认值"""
        values = {k: v for k, v in self.model_dump().items() if v is not None}
        eps = values.get("eps")
        if eps is not None:
            as_list = eps if isinstance(eps, list) else [eps]
            if command == "thm2":
                if len(as_list) != 1:
                    raise ParameterError("thm2 只接受一个 eps")
                values["eps"] = float(as_list[0])
            else:
                values["eps"] = [float(e) for e in as_list]
        return values
