# -*- coding: utf-8 -*-
"""平面刚体位姿代数 SE(2)。

位姿 g = (x, y, theta)，体坐标速度 ξ = (ξ_x, ξ_y, ξ_θ)。
本模块全部为纯函数，可在任意线程中并发调用。
"""

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

# |ξ_θ·dt| 低于此值时使用级数展开分支
SMALL_ANGLE = 1e-8

_SQRT3_6 = math.sqrt(3.0) / 6.0
CF4_BETA_1 = 0.25 + _SQRT3_6
CF4_BETA_2 = 0.25 - _SQRT3_6


def wrap_angle(theta: float) -> float:
    """把角度规范到 (-π, π]。"""
    wrapped = math.pi - math.fmod(math.pi - theta, 2.0 * math.pi)
    if wrapped > math.pi:
        wrapped -= 2.0 * math.pi
    elif wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True, slots=True)
class GroupElement:
    """世界坐标系下的平面位姿（长度单位：体长）。"""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "GroupElement":
        return cls(float(values[0]), float(values[1]), wrap_angle(float(values[2])))

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(0.0, 0.0, 0.0)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return compose(self, other)


@dataclass(frozen=True, slots=True)
class BodyVelocity:
    """体坐标系下的速度 ξ。"""

    xi_x: float = 0.0
    xi_y: float = 0.0
    xi_theta: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.xi_x, self.xi_y, self.xi_theta)):
            raise ValueError(f"body velocity must be finite, got {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.xi_x, self.xi_y, self.xi_theta])

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "BodyVelocity":
        return cls(float(values[0]), float(values[1]), float(values[2]))


TwistLike = Union[BodyVelocity, Sequence[float], np.ndarray]


def _twist(xi: TwistLike) -> tuple[float, float, float]:
    if isinstance(xi, BodyVelocity):
        return xi.xi_x, xi.xi_y, xi.xi_theta
    return float(xi[0]), float(xi[1]), float(xi[2])


def _compose(x1, y1, t1, x2, y2, t2) -> tuple[float, float, float]:
    c, s = math.cos(t1), math.sin(t1)
    return x1 + c * x2 - s * y2, y1 + s * x2 + c * y2, wrap_angle(t1 + t2)


def _exp(vx: float, vy: float, w: float) -> tuple[float, float, float]:
    """单位时间流过扭量 (vx, vy, w) 所到达的位姿。"""
    if abs(w) < SMALL_ANGLE:
        half = 0.5 * w
        return vx - vy * half, vy + vx * half, w
    s, c = math.sin(w), math.cos(w)
    return (vx * s - vy * (1.0 - c)) / w, (vx * (1.0 - c) + vy * s) / w, wrap_angle(w)


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    """群乘积 g·h。"""
    return GroupElement(*_compose(g.x, g.y, g.theta, h.x, h.y, h.theta))


def inverse(g: GroupElement) -> GroupElement:
    """群逆元 g⁻¹。"""
    c, s = math.cos(g.theta), math.sin(g.theta)
    return GroupElement(-(c * g.x + s * g.y), -(-s * g.x + c * g.y), wrap_angle(-g.theta))


def between(g: GroupElement, h: GroupElement) -> GroupElement:
    """从 g 到 h 的位移，在 g 的坐标系中表示：g⁻¹·h。"""
    return compose(inverse(g), h)


def exp(xi: TwistLike, dt: float) -> GroupElement:
    """以恒定体速度 ξ 流动 dt 时间所到达的群元素。

    |ξ_θ·dt| < SMALL_ANGLE 时使用级数展开分支，避免圆弧公式的相消误差。
    """
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    vx, vy, w = _twist(xi)
    return GroupElement(*_exp(vx * dt, vy * dt, w * dt))


def log(g: GroupElement) -> BodyVelocity:
    """对数映射：返回满足 exp(ξ, 1) = g 的扭量 ξ。"""
    w = g.theta
    if abs(w) < SMALL_ANGLE:
        half = 0.5 * w
        return BodyVelocity(g.x + g.y * half, g.y - g.x * half, w)
    a = math.sin(w) / w
    b = (1.0 - math.cos(w)) / w
    det = a * a + b * b
    return BodyVelocity((a * g.x + b * g.y) / det, (-b * g.x + a * g.y) / det, w)


def integrate_trajectory(
    g0: GroupElement,
    xi_series: Union[Iterable[TwistLike], np.ndarray],
    dt: float,
) -> GroupElement:
    """左乘累积每一步的指数映射：g_{n+1} = g_n · exp(ξ_n, dt)。

    参数：
        g0: 初始位姿
        xi_series: 均匀采样的体速度序列（BodyVelocity 或 (N, 3) 数组）
        dt: 采样步长，必须为正

    返回：
        GroupElement: 末位姿；空序列时返回 g0
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    x, y, t = g0.x, g0.y, g0.theta
    for xi in xi_series:
        vx, vy, w = _twist(xi)
        x, y, t = _compose(x, y, t, *_exp(vx * dt, vy * dt, w * dt))
    return GroupElement(x, y, t)


def trajectory_poses(g0: GroupElement, xi_series: np.ndarray, dt: float) -> np.ndarray:
    """与 integrate_trajectory 相同，但返回 (N+1, 3) 的全部中间位姿。"""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    xi_series = np.asarray(xi_series, dtype=float).reshape(-1, 3)
    poses = np.empty((len(xi_series) + 1, 3))
    x, y, t = g0.x, g0.y, g0.theta
    poses[0] = x, y, t
    for n, (vx, vy, w) in enumerate(xi_series):
        x, y, t = _compose(x, y, t, *_exp(vx * dt, vy * dt, w * dt))
        poses[n + 1] = x, y, t
    return poses


def cf4_step(g: GroupElement, xi_a: TwistLike, xi_b: TwistLike, dt: float) -> GroupElement:
    """四阶无交换子李群积分步。

    xi_a、xi_b 是步内两个 Gauss-Legendre 节点 (1/2 ∓ √3/6)·dt 处的体速度：
    g · exp(dt(β₁ξ_a + β₂ξ_b)) · exp(dt(β₂ξ_a + β₁ξ_b))。
    """
    ax, ay, aw = _twist(xi_a)
    bx, by, bw = _twist(xi_b)
    first = _exp(
        dt * (CF4_BETA_1 * ax + CF4_BETA_2 * bx),
        dt * (CF4_BETA_1 * ay + CF4_BETA_2 * by),
        dt * (CF4_BETA_1 * aw + CF4_BETA_2 * bw),
    )
    second = _exp(
        dt * (CF4_BETA_2 * ax + CF4_BETA_1 * bx),
        dt * (CF4_BETA_2 * ay + CF4_BETA_1 * by),
        dt * (CF4_BETA_2 * aw + CF4_BETA_1 * bw),
    )
    x, y, t = _compose(g.x, g.y, g.theta, *first)
    return GroupElement(*_compose(x, y, t, *second))


def transform_point(g: GroupElement, point: Sequence[float]) -> np.ndarray:
    """把体坐标系中的点变换到世界坐标系。"""
    c, s = math.cos(g.theta), math.sin(g.theta)
    px, py = float(point[0]), float(point[1])
    return np.array([g.x + c * px - s * py, g.y + s * px + c * py])


__all__ = [
    "SMALL_ANGLE",
    "GroupElement",
    "BodyVelocity",
    "wrap_angle",
    "compose",
    "inverse",
    "between",
    "exp",
    "log",
    "integrate_trajectory",
    "trajectory_poses",
    "cf4_step",
    "transform_point",
]
