"""Command-line interface. Offline verbs (dump preprocess, build, export,
eval) use the library directly; submit/status are thin HTTP clients against a
running service."""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

import click
import httpx

from .config import Settings, load_settings
from .embedding import HashEmbedder
from .evaluation import SrsSession, eval_extraction_diff, format_accuracy
from .extraction import detect_recurring_noise, extract_material_text, ingest
from .graph import EduKG, Edge, Node, export as export_graph
from .kb import KBStore, preprocess_dump
from .materials import MaterialStore
from .orchestration import JobStore, RespBroker, worker_run
from .pipeline import PipelineConfig, PipelineDeps, build_material


@click.group()
@click.option("--config", "config_file", type=click.Path(), default=None,
              help="TOML settings file")
@click.pass_context
def main(ctx, config_file):
    ctx.obj = load_settings(config_file)


@main.command("ingest")
@click.argument("path", type=click.Path(exists=True))
def ingest_cmd(path):
    """Parse a positioned-elements JSON file and report its shape."""
    pages = ingest(Path(path).read_bytes(), format="elements-json")
    noise = detect_recurring_noise(pages)
    texts = extract_material_text(pages, noise)
    click.echo(json.dumps({
        "pages": pages.page_count,
        "elements": sum(len(p.elements) for p in pages.pages),
        "noise_fragments": len(noise),
        "slide_chars": [len(t) for t in texts.slide_texts],
    }))


def _run_build(settings: Settings, material_id, name, input_path) -> dict:
    kb = KBStore.load(settings.kb_path)
    config = PipelineConfig(threshold=settings.threshold,
                            extractor=settings.extractor,
                            keyphrase_n=settings.keyphrase_n,
                            related_cap=settings.related_cap,
                            category_cap=settings.category_cap)
    deps = PipelineDeps.local(kb, HashEmbedder(), config)
    store = MaterialStore(settings.materials_dir)
    elements = json.loads(Path(input_path).read_text())
    result = build_material(material_id, name or material_id, elements,
                            deps, config, store=store)
    return {
        "material_id": result.material_id,
        "slides": result.slide_count,
        "mcs": sum(len(m) for m in result.mcs_per_slide),
        "nodes": len(result.kg.nodes),
        "edges": len(result.kg.edges),
    }


@main.command("build")
@click.option("--material-id", required=True)
@click.option("--name", default="")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.pass_obj
def build_cmd(settings: Settings, material_id, name, input_path):
    """Build a material's knowledge graph with the local KB and linker."""
    click.echo(json.dumps(_run_build(settings, material_id, name, input_path)))


@main.command("expand")
@click.option("--material-id", required=True)
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.pass_obj
def expand_cmd(settings: Settings, material_id, input_path):
    """Rebuild a material including expansion (full rebuild; expansion state
    is derived from the merged graph)."""
    click.echo(json.dumps(_run_build(settings, material_id, material_id, input_path)))


@main.command("export")
@click.option("--material-id", required=True)
@click.option("--format", "fmt", type=click.Choice(["jsonl", "graphml"]),
              default="jsonl")
@click.option("--output", type=click.Path(), default="-")
@click.pass_obj
def export_cmd(settings: Settings, material_id, fmt, output):
    """Export a built material graph."""
    store = MaterialStore(settings.materials_dir)
    kg = store.read_material(material_id)
    data = export_graph(kg, fmt)
    if output == "-":
        sys.stdout.buffer.write(data)
    else:
        Path(output).write_bytes(data)


@main.group("dump")
def dump_group():
    """Knowledge-base dump operations."""


@dump_group.command("preprocess")
@click.argument("xml_path", type=click.Path(exists=True))
@click.pass_obj
def dump_preprocess(settings: Settings, xml_path):
    """Build the local KB store from a wiki XML export."""
    stats = preprocess_dump(Path(xml_path).read_bytes(), HashEmbedder(),
                            settings.kb_path)
    click.echo(json.dumps(stats.to_json_dict()))


@main.group("eval")
def eval_group():
    """Evaluation utilities."""


@eval_group.command("srs")
@click.option("--simulate", "p", type=float, required=True,
              help="Bernoulli accuracy of the simulated annotator")
@click.option("--runs", type=int, default=1)
@click.option("--seed", type=int, default=0)
def eval_srs(p, runs, seed):
    """Simulate SRS annotation sessions and report the stopped estimates."""
    rng = random.Random(seed)
    results = []
    for run in range(runs):
        kg = _synthetic_kg(2000)
        session = SrsSession(kg, seed=rng.randrange(1 << 30), batch_size=50)
        while not session.stats.stopped:
            triple = session.next_triple()
            if triple is None:
                break
            session.judge(triple.key, 1 if rng.random() < p else 0)
        s = session.stats
        results.append({"n": s.n, "mu": s.mu, "sigma": s.sigma, "moe": s.moe,
                        "stopped": s.stopped,
                        "readout": format_accuracy(s.mu, s.sigma)})
    click.echo(json.dumps(results if runs > 1 else results[0], indent=2))


def _synthetic_kg(n_edges: int) -> EduKG:
    kg = EduKG("simulated")
    kg.add_node(Node(id="material:simulated", type="LearningMaterial"))
    for i in range(n_edges):
        kg.add_node(Node(id=f"page:{i}", type="Concept"))
        kg.add_edge(Edge(type="HAS_CONCEPT", src="material:simulated",
                         dst=f"page:{i}", weight=0.5))
    return kg


@eval_group.command("textdiff")
@click.argument("output_path", type=click.Path(exists=True))
@click.argument("gold_path", type=click.Path(exists=True))
def eval_textdiff(output_path, gold_path):
    """Diff metrics between extracted and gold text."""
    metrics = eval_extraction_diff(Path(output_path).read_text(),
                                   Path(gold_path).read_text())
    click.echo(json.dumps(metrics.to_dict()))


@main.command("serve")
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.pass_obj
def serve_cmd(settings: Settings, host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(settings), host=host or settings.host,
                port=port or settings.port)


@main.command("worker")
@click.pass_obj
def worker_cmd(settings: Settings):
    """Run a standalone worker against a RESP broker."""
    import threading

    from .service import AppState
    if not settings.broker_url.startswith("redis://"):
        raise click.UsageError("standalone workers require a redis:// broker URL")
    broker = RespBroker(settings.broker_url)
    state = AppState(settings)
    worker_run(broker, JobStore(), {"build_kg": state._build_kg,
                                    "expand_kg": state._build_kg,
                                    "preprocess_dump": state._preprocess_dump},
               threading.Event())


@main.command("submit")
@click.option("--server", default="http://127.0.0.1:8000")
@click.option("--material-id", required=True)
@click.option("--name", default="")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
def submit_cmd(server, material_id, name, input_path):
    """Submit a material to a running service (thin HTTP client)."""
    elements = json.loads(Path(input_path).read_text())
    resp = httpx.post(f"{server}/materials", json={
        "material_id": material_id, "name": name or material_id,
        "elements": elements})
    resp.raise_for_status()
    click.echo(resp.text)


@main.command("status")
@click.argument("job_id")
@click.option("--server", default="http://127.0.0.1:8000")
def status_cmd(job_id, server):
    """Fetch job status from a running service."""
    resp = httpx.get(f"{server}/jobs/{job_id}")
    resp.raise_for_status()
    click.echo(resp.text)
