# -*- coding: utf-8 -*-
"""N 连杆低雷诺数 Purcell 游动体的真值物理。

体坐标系固定在中间连杆的中心，x 轴沿中间连杆。关节角是相邻连杆之间的
相对转角：连杆 j+1 的朝向 = 连杆 j 的朝向 + r_j。

每根连杆受阻力理论（resistive force theory）描述的分布粘性阻力：
切向系数 c_t，法向系数 k·c_t。沿连杆解析积分（零阶与一阶矩），
令总力与总力矩为零，得到 ω_ξ(r)·ξ + ω_r(r)·ṙ = 0，
于是局部联络 A(r) = ω_ξ⁻¹·ω_r，且 ξ = −A(r)·ṙ。
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .errors import DimensionMismatchError, NumericalSingularityError
from .gait import TWO_PI, Gait, PerturbationState, nominal_shape_many, step_perturbation
from .se2 import BodyVelocity, GroupElement, between, cf4_step, transform_point

logger = logging.getLogger(__name__)

# 形状 r 与形状速度 ṙ 都是长度为 d = n_links − 1 的向量
Shape = NDArray[np.float64]
ShapeVelocity = NDArray[np.float64]

CONDITION_LIMIT = 1e12

_GAUSS_NODES = (0.5 - math.sqrt(3.0) / 6.0, 0.5 + math.sqrt(3.0) / 6.0)


class SwimmerParams(BaseModel):
    """N 连杆游动体的几何与阻力参数。"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_links: int = Field(default=3, ge=3, description="连杆数，奇数")
    link_length: float = Field(default=1.0, gt=0, description="每根连杆的长度")
    c_tangential: float = Field(default=1.0, gt=0, description="单位长度切向阻力系数")
    drag_ratio: float = Field(default=2.0, ge=1.0, description="法向/切向阻力系数之比 k")

    @field_validator("n_links")
    def _odd_links(cls, v: int) -> int:
        """中间连杆定义体坐标系，要求连杆数为奇数。"""
        if v % 2 == 0:
            raise ValueError(f"n_links must be odd so a middle link exists, got {v}")
        return v

    @property
    def shape_dim(self) -> int:
        return self.n_links - 1

    @property
    def body_length(self) -> float:
        return self.n_links * self.link_length


@dataclass(frozen=True)
class LinkFrames:
    """体坐标系中各连杆的几何及其对 r 的雅可比。"""

    angles: np.ndarray  # (N,)
    centers: np.ndarray  # (N, 2)
    tangents: np.ndarray  # (N, 2)
    normals: np.ndarray  # (N, 2)
    angle_jacobian: np.ndarray  # (N, d)
    center_jacobian: np.ndarray  # (N, 2, d)


def _check_shape(r: np.ndarray, params: SwimmerParams) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (params.shape_dim,):
        raise DimensionMismatchError(
            f"shape must have {params.shape_dim} joint angles, got shape {r.shape}"
        )
    return r


def link_frames(r: Shape, params: SwimmerParams) -> LinkFrames:
    """由关节角计算各连杆的中心、切向、法向及其雅可比。"""
    r = _check_shape(r, params)
    n, d, half = params.n_links, params.shape_dim, 0.5 * params.link_length
    mid = n // 2

    angle_jacobian = np.zeros((n, d))
    for i in range(mid + 1, n):
        angle_jacobian[i, mid:i] = 1.0
    for i in range(mid):
        angle_jacobian[i, i:mid] = -1.0
    angles = angle_jacobian @ r

    tangents = np.column_stack((np.cos(angles), np.sin(angles)))
    normals = np.column_stack((-tangents[:, 1], tangents[:, 0]))

    centers = np.zeros((n, 2))
    center_jacobian = np.zeros((n, 2, d))
    for i in range(mid + 1, n):
        centers[i] = centers[i - 1] + half * (tangents[i - 1] + tangents[i])
        center_jacobian[i] = center_jacobian[i - 1] + half * (
            np.outer(normals[i - 1], angle_jacobian[i - 1])
            + np.outer(normals[i], angle_jacobian[i])
        )
    for i in range(mid - 1, -1, -1):
        centers[i] = centers[i + 1] - half * (tangents[i + 1] + tangents[i])
        center_jacobian[i] = center_jacobian[i + 1] - half * (
            np.outer(normals[i + 1], angle_jacobian[i + 1])
            + np.outer(normals[i], angle_jacobian[i])
        )

    return LinkFrames(angles, centers, tangents, normals, angle_jacobian, center_jacobian)


def force_balance(r: Shape, params: SwimmerParams) -> tuple[np.ndarray, np.ndarray]:
    """返回力与力矩平衡方程的系数矩阵 (ω_ξ, ω_r)，形状 (3, 3) 与 (3, d)。

    连杆 i 上 s ∈ [−L/2, L/2] 处的速度为 V_i + s·w_i·n_i，
    其中 V_i 是中心速度，w_i = ξ_θ + α̇_i。阻力密度 −c_t·D_i·u，
    D_i = t tᵀ + k n nᵀ。对 s 积分后一阶矩项在力中消失，
    力矩中只留下 k·w_i·L³/12。
    """
    frames = link_frames(r, params)
    length, k = params.link_length, params.drag_ratio
    rotational = k * length**3 / 12.0

    drag = (
        np.einsum("ni,nj->nij", frames.tangents, frames.tangents)
        + k * np.einsum("ni,nj->nij", frames.normals, frames.normals)
    )
    # 刚体速度场在连杆中心处的取值：[ξ_x, ξ_y] + ξ_θ·(−p_y, p_x)
    lever = np.column_stack((-frames.centers[:, 1], frames.centers[:, 0]))
    rigid = np.zeros((params.n_links, 2, 3))
    rigid[:, 0, 0] = 1.0
    rigid[:, 1, 1] = 1.0
    rigid[:, :, 2] = lever

    force_xi = length * np.einsum("nij,njk->ik", drag, rigid)
    force_r = length * np.einsum("nij,njk->ik", drag, frames.center_jacobian)
    torque_xi = length * np.einsum("ni,nij,njk->k", lever, drag, rigid)
    torque_xi[2] += rotational * params.n_links
    torque_r = length * np.einsum("ni,nij,njk->k", lever, drag, frames.center_jacobian)
    torque_r += rotational * frames.angle_jacobian.sum(axis=0)

    omega_xi = -params.c_tangential * np.vstack((force_xi, torque_xi))
    omega_r = -params.c_tangential * np.vstack((force_r, torque_r))
    return omega_xi, omega_r


def local_connection(r: Shape, params: SwimmerParams) -> np.ndarray:
    """局部联络 A(r)，形状 (3, d)，满足 ξ = −A(r)·ṙ。

    异常：
        NumericalSingularityError: ω_ξ 的条件数超过 1e12
    """
    omega_xi, omega_r = force_balance(r, params)
    condition = np.linalg.cond(omega_xi)
    if not condition < CONDITION_LIMIT:
        raise NumericalSingularityError(float(condition), CONDITION_LIMIT)
    return np.linalg.solve(omega_xi, omega_r)


def body_velocity_array(r: Shape, r_dot: ShapeVelocity, params: SwimmerParams) -> np.ndarray:
    """−A(r)·ṙ，以长度为 3 的数组返回。"""
    r_dot = np.asarray(r_dot, dtype=float)
    if r_dot.shape != (params.shape_dim,):
        raise DimensionMismatchError(
            f"shape velocity must have {params.shape_dim} entries, got shape {r_dot.shape}"
        )
    return -local_connection(r, params) @ r_dot


def body_velocity(r: Shape, r_dot: ShapeVelocity, params: SwimmerParams) -> BodyVelocity:
    """式 ξ = −A(r)·ṙ。"""
    return BodyVelocity.from_array(body_velocity_array(r, r_dot, params))


def centroid(r: Shape, params: SwimmerParams) -> np.ndarray:
    """体坐标系中各连杆（等长）中心的平均位置。"""
    return link_frames(r, params).centers.mean(axis=0)


@dataclass
class TrajectorySegment:
    """一段仿真轨迹：每步的 (t, φ, r, ṙ, ξ) 以及位姿与质心。"""

    t: np.ndarray  # (N,)
    phi: np.ndarray  # (N,)
    r: np.ndarray  # (N, d)
    r_dot: np.ndarray  # (N, d)
    xi: np.ndarray  # (N, 3)
    poses: np.ndarray  # (N+1, 3)
    centroids: np.ndarray  # (N+1, 2)
    steps_per_cycle: int
    perturbation: Optional[PerturbationState] = None

    @property
    def n_cycles(self) -> int:
        return len(self.t) // self.steps_per_cycle

    @property
    def final_pose(self) -> GroupElement:
        return GroupElement.from_array(self.poses[-1])

    def cycle_poses(self) -> np.ndarray:
        """每个周期边界处的位姿，形状 (cycles+1, 3)。"""
        return self.poses[:: self.steps_per_cycle]


def steps_per_cycle(period: float, dt: float) -> int:
    """周期必须能被步长整除。"""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    steps = int(round(period / dt))
    if steps < 1 or abs(steps * dt - period) > 1e-9 * period:
        raise ValueError(f"gait period {period} is not divisible into steps of {dt}")
    return steps


def simulate_cycle(
    gait: Gait,
    params: SwimmerParams,
    dt: float,
    perturbation: Optional[PerturbationState] = None,
    cycles: int = 1,
    g0: GroupElement = GroupElement(),
    t0: float = 0.0,
) -> TrajectorySegment:
    """让（可能带扰动的）指令形状轨迹通过 body_velocity 并积分位姿。

    每一步先推进 SDE，使步内形状为 r(t) = θ(φ(t)) + δ_n + (t − t_n)·δ̇_{n+1}；
    记录的样本是 t_n 时刻的精确物理对 (r_n, ṙ_n, ξ_n)。位姿用四阶无交换子
    李群积分器推进，以免积分误差污染模型精度的比较。

    参数：
        gait: 名义步态，从相位 0 开始执行
        params: 游动体参数
        dt: 步长，周期必须能被其整除
        perturbation: 扰动状态（原地推进）；None 表示不加扰动
        cycles: 周期数
        g0: 初始位姿
        t0: 初始时间戳

    返回：
        TrajectorySegment: 轨迹段，其 perturbation 字段是推进后的状态
    """
    if cycles < 0:
        raise ValueError(f"cycles must be non-negative, got {cycles}")
    if gait.n_joints != params.shape_dim:
        raise DimensionMismatchError(
            f"gait has {gait.n_joints} joints but swimmer has {params.shape_dim}"
        )
    steps = steps_per_cycle(gait.period, dt)
    total = steps * cycles
    d = params.shape_dim
    omega = gait.phase_rate

    step_phis = TWO_PI * (np.arange(total) % steps) / steps
    node_phis = np.concatenate(
        [np.mod(step_phis + omega * c * dt, TWO_PI) for c in _GAUSS_NODES]
    )
    nominal_r, nominal_r_dot = nominal_shape_many(gait, np.concatenate((step_phis, node_phis)))

    t = t0 + dt * np.arange(total)
    r = np.empty((total, d))
    r_dot = np.empty((total, d))
    xi = np.empty((total, 3))
    poses = np.empty((total + 1, 3))
    centroids = np.empty((total + 1, 2))

    g = g0
    delta = np.zeros(d) if perturbation is None else perturbation.delta.copy()
    start_r, _ = nominal_shape_many(gait, np.zeros(1))
    poses[0] = g.x, g.y, g.theta
    centroids[0] = transform_point(g, centroid(start_r[0] + delta, params))

    for n in range(total):
        if perturbation is not None:
            delta = perturbation.delta.copy()
            delta_dot = step_perturbation(perturbation, dt).delta_dot.copy()
        else:
            delta_dot = np.zeros(d)

        r[n] = nominal_r[n] + delta
        r_dot[n] = nominal_r_dot[n] + delta_dot
        xi[n] = body_velocity_array(r[n], r_dot[n], params)

        node_xi = []
        for j, c in enumerate(_GAUSS_NODES):
            idx = total * (j + 1) + n
            node_r = nominal_r[idx] + delta + c * dt * delta_dot
            node_xi.append(body_velocity_array(node_r, nominal_r_dot[idx] + delta_dot, params))
        g = cf4_step(g, node_xi[0], node_xi[1], dt)

        poses[n + 1] = g.x, g.y, g.theta
        end_r = nominal_r[(n + 1) % total] + delta + dt * delta_dot
        centroids[n + 1] = transform_point(g, centroid(end_r, params))

    return TrajectorySegment(
        t=t,
        phi=step_phis,
        r=r,
        r_dot=r_dot,
        xi=xi,
        poses=poses,
        centroids=centroids,
        steps_per_cycle=steps,
        perturbation=perturbation,
    )


def cycle_displacements(segment: TrajectorySegment) -> np.ndarray:
    """每个周期起止位姿之间的 SE(2) 位移（在周期起点坐标系中），形状 (cycles, 3)。"""
    boundaries = segment.cycle_poses()
    return np.array(
        [
            between(GroupElement.from_array(a), GroupElement.from_array(b)).as_array()
            for a, b in zip(boundaries[:-1], boundaries[1:])
        ]
    ).reshape(-1, 3)


def centroid_displacements(segment: TrajectorySegment) -> np.ndarray:
    """每个周期质心在世界坐标系中的位移，形状 (cycles, 2)。"""
    boundaries = segment.centroids[:: segment.steps_per_cycle]
    return np.diff(boundaries, axis=0)


__all__ = [
    "Shape",
    "ShapeVelocity",
    "SwimmerParams",
    "LinkFrames",
    "TrajectorySegment",
    "link_frames",
    "force_balance",
    "local_connection",
    "body_velocity",
    "body_velocity_array",
    "centroid",
    "steps_per_cycle",
    "simulate_cycle",
    "cycle_displacements",
    "centroid_displacements",
]
