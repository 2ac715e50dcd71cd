"""Solver, radial, phase-portrait, Monte Carlo and verification endpoints."""

from __future__ import annotations

import logging

from fastapi import APIRouter, HTTPException, status

from app.schemas.report import AggregateReport, ExitEstimateReport, RadialReport, SolveReport
from app.schemas.requests import (
    BallRequest,
    ExitWalkRequest,
    PhaseRequest,
    PhaseResponse,
    SlabRequest,
    SolveRequest,
    VerifyRequest,
)
from app.services.errors import AnalysisError
from app.services.exitwalk import wos_exit_time
from app.services.inequalities import run_suite
from app.services.phase import phase_portrait
from app.services.radial import calibrate, shoot_ball, solve_slab
from app.services.solver import solve_domain

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/api", tags=["analysis"])


def _bad_request(exc: AnalysisError) -> HTTPException:
    logger.warning("요청 처리 실패 (%s): %s", exc.code, exc)
    return HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=exc.to_payload())


@router.post("/solve", response_model=SolveReport, response_model_by_alias=True)
def solve(payload: SolveRequest) -> SolveReport:
    """격자 영역에서 C_p, R_p 계산"""
    try:
        return solve_domain(payload.domain, payload.p, payload.h, payload.options).to_report()
    except AnalysisError as exc:
        raise _bad_request(exc) from exc


@router.post("/radial/ball", response_model=RadialReport, response_model_by_alias=True)
def radial_ball(payload: BallRequest) -> RadialReport:
    try:
        profile = shoot_ball(payload.n, payload.p)
        if payload.calibrate_to is not None:
            profile = calibrate(profile, payload.calibrate_to)
        return profile.to_report()
    except AnalysisError as exc:
        raise _bad_request(exc) from exc


@router.post("/radial/slab", response_model=RadialReport, response_model_by_alias=True)
def radial_slab(payload: SlabRequest) -> RadialReport:
    try:
        return solve_slab(payload.p, payload.lam).to_report()
    except AnalysisError as exc:
        raise _bad_request(exc) from exc


@router.post("/phase", response_model=PhaseResponse)
def phase(payload: PhaseRequest) -> PhaseResponse:
    try:
        data = phase_portrait(payload.system, payload.parameters, payload.levels, resolution=payload.resolution)
    except AnalysisError as exc:
        raise _bad_request(exc) from exc
    return PhaseResponse(
        system=data.system.value,
        parameters=payload.parameters,
        levels=data.levels,
        max_level_error=data.max_level_error(),
        curves=[[polyline.tolist() for polyline in per_level] for per_level in data.curves],
    )


@router.post("/exitwalk", response_model=ExitEstimateReport)
def exitwalk(payload: ExitWalkRequest) -> ExitEstimateReport:
    try:
        estimate = wos_exit_time(
            payload.domain,
            payload.point,
            payload.paths,
            eps=payload.eps,
            seed=payload.seed,
            workers=payload.workers,
        )
    except AnalysisError as exc:
        raise _bad_request(exc) from exc
    return estimate.to_report()


@router.post("/verify", response_model=AggregateReport)
def verify(payload: VerifyRequest) -> AggregateReport:
    """검증 스위트 실행 (claim_id 순으로 정렬된 보고서)"""
    try:
        return run_suite(payload.suite, payload.settings)
    except AnalysisError as exc:
        raise _bad_request(exc) from exc
