"""FastAPI application: one endpoint per verification operation.

Request bodies are scenario payloads (the same schema the CLI validates from
disk); responses carry the outcome summary plus artifact file contents.
Configuration problems map to 422, numerical failures to 500.
"""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..ops import ScenarioError, execute
from ..schemas import HealthResponse, Outcome, Scenario


def _run(scenario: Scenario, op: str) -> Outcome:
    try:
        return execute(scenario, op)
    except (ScenarioError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    except RuntimeError as exc:
        raise HTTPException(status_code=500, detail=str(exc)) from exc


def create_app() -> FastAPI:
    app = FastAPI(
        title="pdmp-verify",
        version=__version__,
        description=(
            "Compile reaction networks to controlled jump-flow processes, simulate them, "
            "and verify viability, invariance and reachability numerically."
        ),
    )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(version=__version__)

    @app.post("/simulate", response_model=Outcome)
    def simulate(scenario: Scenario) -> Outcome:
        return _run(scenario, "simulate")

    @app.post("/check-invariance", response_model=Outcome)
    def check_invariance(scenario: Scenario) -> Outcome:
        return _run(scenario, "check-invariance")

    @app.post("/check-viability", response_model=Outcome)
    def check_viability(scenario: Scenario) -> Outcome:
        return _run(scenario, "check-viability")

    @app.post("/value", response_model=Outcome)
    def value(scenario: Scenario) -> Outcome:
        return _run(scenario, "value")

    @app.post("/solve-hjb", response_model=Outcome)
    def solve_hjb(scenario: Scenario) -> Outcome:
        return _run(scenario, "solve-hjb")

    @app.post("/reach", response_model=Outcome)
    def reach(scenario: Scenario) -> Outcome:
        return _run(scenario, "reach")

    @app.post("/plot", response_model=Outcome)
    def plot(scenario: Scenario) -> Outcome:
        return _run(scenario, "plot")

    return app


app = create_app()
