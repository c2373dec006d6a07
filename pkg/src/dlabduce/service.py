"""HTTP front end for the abduction engine.

Stateless: every request carries its ontology and inputs in the DL text
format and gets back the rendered result plus the run report.  Parse and
admissibility problems map to 400 or 422 with a structured detail body.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import pipeline
from .bench import pick_signature  # noqa: F401  (re-exported for clients)
from .model import RoleAssertionInObservation
from .parser import DLParseError, parse_axiom, parse_observation, parse_ontology, render
from .pipeline import MODES, AbductionRequest, abduce
from .symbols import SymbolSet
from .tableau import FixpointUnsupported, entails


class AbduceIn(BaseModel):
    ontology: str = Field(description="ontology in the DL text format")
    observation: str = Field(description="observation assertions, one per line")
    forget: list[str] = Field(min_length=1, description="concept names to forget")
    mode: str = Field(default="full", pattern="^(approx|full|full-no-approx)$")
    timeout_ms: float = Field(default=300_000.0, gt=0)
    trace: bool = False


class ReportOut(BaseModel):
    mode: str
    hypothesis: str | None
    no_hypothesis_reason: str | None
    v_size: int
    v_app_size: int
    v_star_size: int
    removed_at_filter: list[str]
    removed_at_reduce: list[str]
    retained_unchecked: list[str]
    size_h_disjuncts: int
    t_forget_ms: float
    t_filter_ms: float
    t_reduce_ms: float
    t_total_ms: float
    fixpoint: bool
    trivial: bool
    timeout: bool
    conditions: dict[str, str]
    trace: str | None = None


class AbduceOut(BaseModel):
    hypothesis: str | None
    report: ReportOut


class EntailsIn(BaseModel):
    ontology: str
    axiom: str


class EntailsOut(BaseModel):
    entailed: bool


def _bad_request(exc: Exception, status: int = 400) -> HTTPException:
    return HTTPException(status_code=status,
                         detail={"error": type(exc).__name__, "message": str(exc)})


app = FastAPI(title="dlabduce",
              description="ABox abduction for ALC ontologies by forgetting")


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/abduce", response_model=AbduceOut)
def abduce_endpoint(body: AbduceIn) -> AbduceOut:
    try:
        onto = parse_ontology(body.ontology)
        obs = parse_observation(body.observation)
        fset = SymbolSet.of_concepts(onto.symbols.concept(n) for n in body.forget)
        request = AbductionRequest(onto, obs, fset, mode=body.mode,
                                   budget_ms=body.timeout_ms,
                                   want_trace=body.trace)
    except (DLParseError, RoleAssertionInObservation, ValueError) as exc:
        raise _bad_request(exc) from exc
    try:
        report = abduce(request)
    except pipeline.AbductionError as exc:
        raise _bad_request(exc, status=422) from exc
    payload = report.to_dict(onto.symbols)
    return AbduceOut(
        hypothesis=payload["hypothesis"],
        report=ReportOut(
            mode=payload["mode"],
            hypothesis=payload["hypothesis"],
            no_hypothesis_reason=payload["no_hypothesis_reason"],
            v_size=payload["v_size"],
            v_app_size=payload["v_app_size"],
            v_star_size=payload["v_star_size"],
            removed_at_filter=payload["removed_at_filter"],
            removed_at_reduce=payload["removed_at_reduce"],
            retained_unchecked=payload["retained_unchecked"],
            size_h_disjuncts=payload["size_h_disjuncts"],
            t_forget_ms=payload["t_forget_ms"],
            t_filter_ms=payload["t_filter_ms"],
            t_reduce_ms=payload["t_reduce_ms"],
            t_total_ms=payload["t_total_ms"],
            fixpoint=payload["fixpoint"],
            trivial=payload["trivial"],
            timeout=payload["timeout"],
            conditions=payload["conditions"],
            trace=report.trace,
        ),
    )


@app.post("/entails", response_model=EntailsOut)
def entails_endpoint(body: EntailsIn) -> EntailsOut:
    try:
        onto = parse_ontology(body.ontology)
        axiom = parse_axiom(body.axiom)
    except DLParseError as exc:
        raise _bad_request(exc) from exc
    try:
        return EntailsOut(entailed=entails(onto, axiom))
    except FixpointUnsupported as exc:
        raise _bad_request(exc, status=422) from exc
