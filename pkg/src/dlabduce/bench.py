"""Desk-scale experiment harness.

Reproduces the experimental protocol: for each corpus ontology, a fixed
number of randomly generated consistent, non-entailed single-individual
observations; forgetting signatures of configurable sizes always
containing at least one symbol from the observation; approximate and
full filtering compared on identical inputs; per-call wall-clock budget.

Results land in a CSV with one line per (ontology, mode, signature size,
observation) call, plus aggregated per-configuration rows.  All sampling
is driven by the seed: identical configurations yield identical CSVs up
to the timing columns.
"""

from __future__ import annotations

import csv
import random
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from statistics import mean

from . import model as m
from . import tableau
from .model import Concept, ConceptAssertion, Ontology, signature
from .parser import parse_ontology
from .pipeline import AbductionReport, AbductionRequest, abduce
from .symbols import SymbolSet

CSV_HEADER = ("ontology,mode,sig_size,obs_idx,t_forget_ms,t_filter_ms,"
              "t_reduce_ms,t_total_ms,v_size,v_app_size,v_star_size,"
              "hyp_disjuncts,fixpoint,timeout")


class SamplingExhausted(RuntimeError):
    pass


class SignatureTooLarge(ValueError):
    pass


@dataclass
class BenchConfig:
    corpus: list[Path]
    num_obs: int = 30
    sizes: tuple[int, ...] = (1,)
    modes: tuple[str, ...] = ("approx", "full")
    seed: int = 42
    timeout_ms: float = 300_000.0
    workers: int = 1
    csv_path: Path | None = None
    obs_depth: int = 3


@dataclass
class BenchCall:
    ontology: str
    mode: str
    sig_size: int
    obs_idx: int
    t_forget_ms: float = 0.0
    t_filter_ms: float = 0.0
    t_reduce_ms: float = 0.0
    t_total_ms: float = 0.0
    v_size: int = 0
    v_app_size: int = 0
    v_star_size: int = 0
    hyp_disjuncts: int = 0
    fixpoint: bool = False
    timeout: bool = False
    error: str | None = None

    def key(self):
        return (self.ontology, self.mode, self.sig_size, self.obs_idx)

    def csv_row(self) -> list:
        return [self.ontology, self.mode, self.sig_size, self.obs_idx,
                f"{self.t_forget_ms:.3f}", f"{self.t_filter_ms:.3f}",
                f"{self.t_reduce_ms:.3f}", f"{self.t_total_ms:.3f}",
                self.v_size, self.v_app_size, self.v_star_size,
                self.hyp_disjuncts, int(self.fixpoint), int(self.timeout)]


@dataclass
class BenchRow:
    """Aggregate over the observations of one (ontology, mode, size) cell."""

    ontology: str
    mode: str
    sig_size: int
    calls: int
    mean_t_forget_ms: float
    mean_t_filter_ms: float
    mean_t_reduce_ms: float
    mean_t_total_ms: float
    max_t_total_ms: float
    mean_removed_v_to_vapp: float
    mean_removed_vapp_to_vstar: float
    mean_hyp_disjuncts: float
    max_hyp_disjuncts: int
    pct_happ_redundant: float | None
    timeouts: int
    fixpoints: int


def _derived_seed(*parts) -> int:
    out = 0
    for part in parts:
        out = zlib.crc32(str(part).encode(), out)
    return out


# ---------------------------------------------------------------------------
# Observation and signature sampling
# ---------------------------------------------------------------------------

def _subconcept_pool(onto: Ontology) -> list[Concept]:
    seen: dict[int, Concept] = {}
    for ax in onto.axioms():
        concepts = []
        if hasattr(ax, "concept"):
            concepts = [ax.concept]
        elif hasattr(ax, "lhs"):
            concepts = [ax.lhs, ax.rhs]
        elif hasattr(ax, "disjuncts"):
            concepts = [c for c, _ in ax.disjuncts]
        for c in concepts:
            for sub in m.subconcepts(c):
                if sub.kind not in (m.TOP, m.BOT, m.NOT):
                    seen.setdefault(sub.cid, sub)
    return sorted(seen.values(), key=Concept.skey)


def _sample_concept(rng: random.Random, pool: list[Concept],
                    roles: list[int], depth: int) -> Concept:
    if depth == 0 or rng.random() < 0.45:
        return rng.choice(pool)
    op = rng.choice(["and", "or", "not", "exists", "forall"] if roles
                    else ["and", "or", "not"])
    if op == "and":
        return m.conj(_sample_concept(rng, pool, roles, depth - 1),
                      _sample_concept(rng, pool, roles, depth - 1))
    if op == "or":
        return m.disj(_sample_concept(rng, pool, roles, depth - 1),
                      _sample_concept(rng, pool, roles, depth - 1))
    if op == "not":
        return m.nnf(m.neg(_sample_concept(rng, pool, roles, depth - 1)))
    filler = _sample_concept(rng, pool, roles, depth - 1)
    role = rng.choice(roles)
    return m.exists(role, filler) if op == "exists" else m.forall(role, filler)


def generate_observations(onto: Ontology, n: int, seed: int,
                          depth: int = 3,
                          max_attempts_per_obs: int = 200
                          ) -> list[list[ConceptAssertion]]:
    """Sample n single-individual observations, each consistent with and
    not entailed by the ontology (rejection sampling, seeded)."""
    rng = random.Random(seed)
    pool = _subconcept_pool(onto)
    if not pool:
        raise SamplingExhausted("ontology offers no concepts to observe")
    roles = sorted(signature(onto).roles)
    individuals = sorted(onto.individuals())
    if not individuals:
        individuals = [onto.symbols.individual("_obs")]

    out: list[list[ConceptAssertion]] = []
    attempts = 0
    limit = max_attempts_per_obs * n
    while len(out) < n and attempts < limit:
        attempts += 1
        concept = m.simplify(_sample_concept(rng, pool, roles, depth))
        if concept.kind in (m.TOP, m.BOT):
            continue
        if not signature(concept).user_concepts():
            continue
        psi = ConceptAssertion(concept, rng.choice(individuals))
        probe = onto.extended([psi])
        if not tableau.is_consistent(probe):
            continue
        if tableau.entails(onto, psi):
            continue
        out.append([psi])
    if len(out) < n:
        raise SamplingExhausted(
            f"could not sample {n} admissible observations in {limit} attempts")
    return out


def pick_signature(onto: Ontology, obs: list[ConceptAssertion],
                   size: int, seed: int) -> SymbolSet:
    """A forgetting signature of the given size with at least one concept
    symbol drawn from the observation."""
    if size < 1:
        raise ValueError("signature size must be >= 1")
    rng = random.Random(seed)
    psi_names = sorted(signature(list(obs)).user_concepts())
    if not psi_names:
        raise ValueError("observation has no concept symbols")
    names = sorted(signature(onto).user_concepts() | set(psi_names))
    if size > len(names):
        raise SignatureTooLarge(f"requested {size} symbols, only {len(names)} exist")
    first = rng.choice(psi_names)
    rest = rng.sample([x for x in names if x != first], size - 1)
    return SymbolSet.of_concepts([first] + rest)


# ---------------------------------------------------------------------------
# The run itself
# ---------------------------------------------------------------------------

def load_corpus(paths: list[Path]) -> list[tuple[str, Ontology]]:
    out = []
    for path in sorted(paths):
        out.append((path.stem, parse_ontology(path.read_text(encoding="utf-8"))))
    return out


def _run_one(name: str, onto: Ontology, mode: str, size: int, idx: int,
             obs: list[ConceptAssertion], fset: SymbolSet,
             timeout_ms: float) -> BenchCall:
    call = BenchCall(name, mode, size, idx)
    try:
        report = abduce(AbductionRequest(onto, obs, fset, mode=mode,
                                         budget_ms=timeout_ms))
    except Exception as exc:  # per-row failures must not stop the run
        call.error = f"{type(exc).__name__}: {exc}"
        return call
    call.t_forget_ms = report.t_forget_ms
    call.t_filter_ms = report.t_filter_ms
    call.t_reduce_ms = report.t_reduce_ms
    call.t_total_ms = report.t_total_ms
    call.v_size = report.v_size
    call.v_app_size = report.v_app_size
    call.v_star_size = report.v_star_size
    call.hyp_disjuncts = report.hypothesis_size()
    call.fixpoint = report.fixpoint
    call.timeout = report.timeout
    return call


def run_bench(cfg: BenchConfig) -> tuple[list[BenchRow], list[BenchCall]]:
    """Execute the sweep; returns aggregate rows and per-call records,
    and writes the CSV when a path is configured."""
    corpus = load_corpus([Path(p) for p in cfg.corpus])
    tasks = []
    for name, onto in corpus:
        try:
            observations = generate_observations(
                onto, cfg.num_obs, _derived_seed(cfg.seed, name), cfg.obs_depth)
        except SamplingExhausted as exc:
            tasks.append(BenchCall(name, "-", 0, -1, error=str(exc)))
            continue
        for size in cfg.sizes:
            for idx, obs in enumerate(observations):
                try:
                    fset = pick_signature(onto, obs, size,
                                          _derived_seed(cfg.seed, name, size, idx))
                except (SignatureTooLarge, ValueError) as exc:
                    tasks.append(BenchCall(name, "-", size, idx, error=str(exc)))
                    continue
                for mode in cfg.modes:
                    tasks.append((name, onto, mode, size, idx, obs, fset))

    calls: list[BenchCall] = [t for t in tasks if isinstance(t, BenchCall)]
    work = [t for t in tasks if not isinstance(t, BenchCall)]
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_run_one, name, onto, mode, size, idx, obs, fset,
                                   cfg.timeout_ms)
                       for name, onto, mode, size, idx, obs, fset in work]
            calls.extend(f.result() for f in futures)
    else:
        for name, onto, mode, size, idx, obs, fset in work:
            calls.append(_run_one(name, onto, mode, size, idx, obs, fset,
                                  cfg.timeout_ms))
    calls.sort(key=BenchCall.key)

    if cfg.csv_path is not None:
        write_csv(calls, cfg.csv_path)
    return aggregate(calls), calls


def write_csv(calls: list[BenchCall], path: Path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER.split(","))
        for call in calls:
            if call.error is None:
                writer.writerow(call.csv_row())


def aggregate(calls: list[BenchCall]) -> list[BenchRow]:
    cells: dict[tuple, list[BenchCall]] = {}
    for call in calls:
        if call.error is not None:
            continue
        cells.setdefault((call.ontology, call.mode, call.sig_size), []).append(call)
    rows = []
    for (name, mode, size), group in sorted(cells.items()):
        removed_filter = [c.v_size - c.v_app_size for c in group]
        removed_reduce = [c.v_app_size - c.v_star_size for c in group]
        # share of the approximation that full filtering discards, per
        # observation, averaged over observations with a non-empty V*_app
        shares = [(c.v_app_size - c.v_star_size) / c.v_app_size
                  for c in group if c.v_app_size > 0]
        rows.append(BenchRow(
            ontology=name, mode=mode, sig_size=size, calls=len(group),
            mean_t_forget_ms=mean(c.t_forget_ms for c in group),
            mean_t_filter_ms=mean(c.t_filter_ms for c in group),
            mean_t_reduce_ms=mean(c.t_reduce_ms for c in group),
            mean_t_total_ms=mean(c.t_total_ms for c in group),
            max_t_total_ms=max(c.t_total_ms for c in group),
            mean_removed_v_to_vapp=mean(removed_filter),
            mean_removed_vapp_to_vstar=mean(removed_reduce),
            mean_hyp_disjuncts=mean(c.hyp_disjuncts for c in group),
            max_hyp_disjuncts=max(c.hyp_disjuncts for c in group),
            pct_happ_redundant=(100.0 * mean(shares)) if shares and mode != "approx"
            else None,
            timeouts=sum(c.timeout for c in group),
            fixpoints=sum(c.fixpoint for c in group),
        ))
    return rows
