"""Command line interface.

The CLI is a thin client over the core package: commands parse their
inputs, call the pipeline and print the rendered result.  ``abduce`` and
``entails`` can alternatively talk to a running service (``--server``)
instead of computing locally; ``serve`` starts that service.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .bench import BenchConfig, run_bench
from .model import RoleAssertionInObservation
from .parser import DLParseError, parse_axiom, parse_observation, parse_ontology, render
from .pipeline import (
    AbductionError,
    AbductionRequest,
    MODES,
    abduce,
)
from .symbols import GLOBAL_TABLE, SymbolSet
from .tableau import FixpointUnsupported, entails as tableau_entails


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise click.ClickException(f"cannot read {path}: {exc}") from exc


def _parse_forget(onto, forget: str) -> SymbolSet:
    names = [part.strip() for part in forget.split(",") if part.strip()]
    if not names:
        raise click.ClickException("--forget must list at least one concept name")
    return SymbolSet.of_concepts(onto.symbols.concept(n) for n in names)


@click.group()
def main() -> None:
    """Abductive reasoning for ALC ontologies via forgetting."""


@main.command("abduce")
@click.option("--ontology", "ontology_path", required=True, type=click.Path(exists=True))
@click.option("--observation", "observation_path", required=True,
              type=click.Path(exists=True))
@click.option("--forget", required=True,
              help="comma-separated concept names to forget")
@click.option("--mode", type=click.Choice(MODES), default="full", show_default=True)
@click.option("--timeout-ms", type=float, default=300_000.0, show_default=True)
@click.option("--trace", "trace_path", type=click.Path(), default=None,
              help="write the derivation trace to this file")
@click.option("--report", "report_path", type=click.Path(), default=None,
              help="write the run report as JSON to this file")
@click.option("--server", default=None, help="delegate to a running service URL")
def abduce_cmd(ontology_path, observation_path, forget, mode, timeout_ms,
               trace_path, report_path, server):
    """Compute an abductive hypothesis for an observation."""
    if server is not None:
        _abduce_remote(server, ontology_path, observation_path, forget, mode,
                       timeout_ms, trace_path, report_path)
        return
    try:
        onto = parse_ontology(_read(ontology_path))
        obs = parse_observation(_read(observation_path))
        request = AbductionRequest(onto, obs, _parse_forget(onto, forget),
                                   mode=mode, budget_ms=timeout_ms,
                                   want_trace=trace_path is not None)
        result = abduce(request)
    except (DLParseError, RoleAssertionInObservation, AbductionError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc
    if trace_path is not None and result.trace is not None:
        Path(trace_path).write_text(result.trace + "\n", encoding="utf-8")
    if report_path is not None:
        Path(report_path).write_text(result.to_json(onto.symbols) + "\n",
                                     encoding="utf-8")
    if result.hypothesis is not None:
        click.echo(render(result.hypothesis, onto.symbols))
    else:
        click.echo(f"no hypothesis: {result.no_hypothesis_reason}")
        sys.exit(2)


def _abduce_remote(server, ontology_path, observation_path, forget, mode,
                   timeout_ms, trace_path, report_path):
    import httpx

    payload = {
        "ontology": _read(ontology_path),
        "observation": _read(observation_path),
        "forget": [p.strip() for p in forget.split(",") if p.strip()],
        "mode": mode,
        "timeout_ms": timeout_ms,
        "trace": trace_path is not None,
    }
    response = httpx.post(f"{server.rstrip('/')}/abduce", json=payload, timeout=None)
    if response.status_code != 200:
        raise click.ClickException(f"server error {response.status_code}: "
                                   f"{response.text}")
    body = response.json()
    report = body["report"]
    if trace_path is not None and report.get("trace"):
        Path(trace_path).write_text(report["trace"] + "\n", encoding="utf-8")
    if report_path is not None:
        Path(report_path).write_text(json.dumps(report, indent=2) + "\n",
                                     encoding="utf-8")
    if body["hypothesis"] is not None:
        click.echo(body["hypothesis"])
    else:
        click.echo(f"no hypothesis: {report.get('no_hypothesis_reason')}")
        sys.exit(2)


@main.command("entails")
@click.option("--ontology", "ontology_path", required=True, type=click.Path(exists=True))
@click.option("--axiom", required=True, help="axiom in the DL text format")
@click.option("--server", default=None, help="delegate to a running service URL")
def entails_cmd(ontology_path, axiom, server):
    """Exit 0 if the ontology entails the axiom, 1 otherwise."""
    if server is not None:
        import httpx

        response = httpx.post(f"{server.rstrip('/')}/entails",
                              json={"ontology": _read(ontology_path), "axiom": axiom},
                              timeout=None)
        if response.status_code != 200:
            raise click.ClickException(f"server error {response.status_code}: "
                                       f"{response.text}")
        verdict = response.json()["entailed"]
    else:
        try:
            onto = parse_ontology(_read(ontology_path))
            verdict = tableau_entails(onto, parse_axiom(axiom))
        except (DLParseError, FixpointUnsupported, TypeError) as exc:
            raise click.ClickException(str(exc)) from exc
    click.echo("entailed" if verdict else "not entailed")
    sys.exit(0 if verdict else 1)


@main.command("bench")
@click.option("--corpus", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--num-obs", type=int, default=30, show_default=True)
@click.option("--sizes", default="1", show_default=True,
              help="comma-separated forgetting signature sizes")
@click.option("--modes", default="approx,full", show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--timeout-ms", type=float, default=300_000.0, show_default=True)
@click.option("--csv", "csv_path", required=True, type=click.Path())
@click.option("--workers", type=int, default=1, show_default=True)
def bench_cmd(corpus, num_obs, sizes, modes, seed, timeout_ms, csv_path, workers):
    """Run the experiment harness over a corpus directory of .dl files."""
    paths = sorted(Path(corpus).glob("*.dl"))
    if not paths:
        raise click.ClickException(f"no .dl files under {corpus}")
    cfg = BenchConfig(
        corpus=paths,
        num_obs=num_obs,
        sizes=tuple(int(s) for s in sizes.split(",") if s.strip()),
        modes=tuple(s.strip() for s in modes.split(",") if s.strip()),
        seed=seed,
        timeout_ms=timeout_ms,
        workers=workers,
        csv_path=Path(csv_path),
    )
    rows, calls = run_bench(cfg)
    errors = [c for c in calls if c.error is not None]
    for row in rows:
        redund = ("-" if row.pct_happ_redundant is None
                  else f"{row.pct_happ_redundant:.2f}%")
        click.echo(f"{row.ontology} mode={row.mode} |F|={row.sig_size} "
                   f"calls={row.calls} mean_total={row.mean_t_total_ms:.1f}ms "
                   f"max_total={row.max_t_total_ms:.1f}ms "
                   f"removed {row.mean_removed_v_to_vapp:.1f}/"
                   f"{row.mean_removed_vapp_to_vstar:.2f} "
                   f"H {row.mean_hyp_disjuncts:.2f}/{row.max_hyp_disjuncts} "
                   f"redund={redund} timeouts={row.timeouts} "
                   f"fixpoints={row.fixpoints}")
    if errors:
        click.echo(f"{len(errors)} calls failed:", err=True)
        for call in errors:
            click.echo(f"  {call.ontology}/{call.mode}/{call.sig_size}/"
                       f"{call.obs_idx}: {call.error}", err=True)
    click.echo(f"wrote {csv_path}")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve_cmd(host, port):
    """Start the HTTP service."""
    import uvicorn

    uvicorn.run("dlabduce.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
