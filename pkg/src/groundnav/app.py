"""Command-line interface and HTTP service for the grounding engine."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import threading
from collections import OrderedDict

from . import datagen, grounder, planner, trainer
from .grounder import GroundingError, ModelParams, ground
from .language import Lexicon, ParseError
from .mapmodel import MapError, load_map
from .sample_map import build_office_map

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_DEGENERATE = 3

DEFAULT_PORT = int(os.environ.get("GROUNDNAV_PORT", "8440"))


def _load_area_map(path):
    """Load a map document; the literal name 'office80' is built in."""
    if path == "office80":
        return build_office_map()
    with open(path, "rb") as f:
        return load_map(f.read())


def _build_lexicon(amap, config):
    extra = config.get("extra_words", []) if config else []
    return Lexicon.build(amap, extra_words=extra)


def _read_config(path):
    if not path:
        return {}
    with open(path) as f:
        return json.load(f)


def cmd_gen_data(args):
    amap = _load_area_map(args.map)
    lexicon = _build_lexicon(amap, _read_config(args.config))
    samples = datagen.generate_dataset(amap, lexicon, k=args.k, seed=args.seed)
    datagen.save_dataset(samples, args.out, amap, grids=args.grids)
    print(f"wrote {len(samples)} samples to {args.out}")
    return EXIT_OK


def cmd_train(args):
    amap = _load_area_map(args.map)
    config_doc = _read_config(args.config)
    lexicon = _build_lexicon(amap, config_doc)
    cfg_fields = {k: v for k, v in config_doc.items() if k != "extra_words"}
    config = trainer.TrainConfig(**cfg_fields)
    if args.data:
        samples = datagen.load_dataset(args.data, amap, lexicon)
    else:
        samples = datagen.generate_dataset(amap, lexicon, k=args.k,
                                           seed=config.seed, rho=config.rho)
    params, report = trainer.train(samples, amap, config, lexicon=lexicon)
    params.save(args.out)
    print(report.to_text())
    print(f"model written to {args.out}")
    return EXIT_OK


def cmd_eval(args):
    amap = _load_area_map(args.map)
    params = ModelParams.load(args.model)
    samples = datagen.load_dataset(args.data, amap, params.lexicon)
    report = trainer.evaluate(params, samples, amap)
    print(report.to_text())
    return EXIT_OK


def cmd_ground(args):
    amap = _load_area_map(args.map)
    params = ModelParams.load(args.model)
    try:
        trace = ground(args.text, amap, params)
    except ParseError as e:
        print(f"cannot parse instruction: {e}", file=sys.stderr)
        return EXIT_INPUT
    except GroundingError as e:
        print(f"grounding degenerated at step {e.step}: {e}", file=sys.stderr)
        return EXIT_DEGENERATE
    for i, (modifier, kind, _) in enumerate(trace.steps):
        print(f"step {i}: [{kind.name.lower()}] {modifier.raw!r}")
    print("ranked areas:")
    for area_id, weight in trace.ranked[:10]:
        print(f"  {area_id:>6}  {weight:.4f}")
    if args.heatmaps:
        os.makedirs(args.heatmaps, exist_ok=True)
        for i, (_, _, belief) in enumerate(trace.steps):
            with open(os.path.join(args.heatmaps, f"step_{i}.pgm"), "wb") as f:
                f.write(belief.to_pgm())
        print(f"heatmaps written to {args.heatmaps}")
    return EXIT_OK


def cmd_bench(args):
    amap = _load_area_map(args.map)
    params = ModelParams.load(args.model)
    if args.queries:
        with open(args.queries) as f:
            queries = [tuple(json.loads(line)) for line in f if line.strip()]
    else:
        queries = []
        for steps in (1, 3, 5):
            queries += datagen.gen_composite(amap, params.lexicon, seed=args.seed,
                                             n=args.n, steps=steps)
    rows = trainer.benchmark_composite(queries, amap, params)
    print(trainer.benchmark_table(rows))
    return EXIT_OK


def cmd_plan(args):
    amap = _load_area_map(args.map)
    graph = planner.build_adjacency(amap)
    try:
        plan_fn = planner.bfs_plan if args.shortest else planner.dfs_plan
        path = plan_fn(graph, args.start, args.goal)
    except planner.PlanError as e:
        print(str(e), file=sys.stderr)
        return EXIT_INPUT
    print(json.dumps(path))
    return EXIT_OK


def cmd_serve(args):
    import uvicorn

    amap = _load_area_map(args.map)
    params = ModelParams.load(args.model)
    app = create_app(params, amap, start_area=args.start)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="groundnav",
        description="Ground implicit destination descriptions on a segmented map.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate synthetic training samples")
    p.add_argument("--map", default="office80")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--grids", choices=["pgm", "rle"], default="pgm")
    p.add_argument("--config")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train a grounding model")
    p.add_argument("--map", default="office80")
    p.add_argument("--data", help="dataset path; generated fresh when omitted")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--map", default="office80")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ground", help="ground one instruction")
    p.add_argument("--model", required=True)
    p.add_argument("--map", default="office80")
    p.add_argument("--text", required=True)
    p.add_argument("--heatmaps", help="directory for per-step PGM heatmaps")
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("bench", help="composite-query benchmark")
    p.add_argument("--model", required=True)
    p.add_argument("--map", default="office80")
    p.add_argument("--queries", help="JSONL of [instruction, gold] pairs")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("plan", help="area-level path plan")
    p.add_argument("--map", default="office80")
    p.add_argument("--start", required=True)
    p.add_argument("--goal", required=True)
    p.add_argument("--shortest", action="store_true", help="BFS instead of DFS")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--model", required=True)
    p.add_argument("--map", default="office80")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--start", help="initial robot area id")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (MapError, ParseError, FileNotFoundError, json.JSONDecodeError) as e:
        print(str(e), file=sys.stderr)
        return EXIT_INPUT
    except GroundingError as e:
        print(str(e), file=sys.stderr)
        return EXIT_DEGENERATE


# -- HTTP service ----------------------------------------------------------

# request models live at module level so postponed annotations resolve
from pydantic import BaseModel


class GroundRequest(BaseModel):
    instruction: str
    robot_area: str | None = None


class PlanRequest(BaseModel):
    start: str | None = None
    goal: str


class MoveRequest(BaseModel):
    plan: list


def create_app(params: ModelParams, amap, start_area=None, cache_size=128):
    """FastAPI app sharing one read-only model/map across requests.

    Mutable state is the bounded trace cache and the simulated robot
    position, both lock-guarded.
    """
    from fastapi import FastAPI, HTTPException, Response

    graph = planner.build_adjacency(amap)
    start = start_area or amap.areas[0].id
    amap.area_index(start)

    state = {"robot": start, "next_trace": 0}
    traces = OrderedDict()  # trace_id -> BeliefTrace, LRU bounded
    lock = threading.Lock()

    app = FastAPI(title="groundnav")

    @app.get("/map")
    def get_map():
        return {
            "map": amap.to_document(),
            "layout": {
                "width": amap.width,
                "height": amap.height,
                "x_min": amap.x_min,
                "y_min": amap.y_min,
                "x_max": amap.x_max,
                "y_max": amap.y_max,
            },
            "adjacency": [sorted(e) for e in graph.edges],
        }

    @app.post("/ground")
    def post_ground(req: GroundRequest):
        try:
            trace = ground(req.instruction, amap, params)
        except ParseError as e:
            raise HTTPException(status_code=400, detail=str(e))
        except GroundingError as e:
            raise HTTPException(
                status_code=409,
                detail={"message": str(e), "kind": e.kind, "step": e.step},
            )
        with lock:
            trace_id = state["next_trace"]
            state["next_trace"] += 1
            traces[trace_id] = trace
            while len(traces) > cache_size:
                traces.popitem(last=False)
        return {
            "trace_id": trace_id,
            "steps": [
                {
                    "modifier": modifier.raw,
                    "type": kind.name.lower(),
                    "belief": f"/belief/{trace_id}/{i}",
                    "argmax_cell": belief.argmax_cell(),
                }
                for i, (modifier, kind, belief) in enumerate(trace.steps)
            ],
            "ranked_areas": [
                {"id": area_id, "weight": weight} for area_id, weight in trace.ranked
            ],
        }

    def _get_trace_step(trace_id, step):
        with lock:
            trace = traces.get(trace_id)
        if trace is None:
            raise HTTPException(status_code=404, detail="unknown trace")
        if not (0 <= step < len(trace.steps)):
            raise HTTPException(status_code=404, detail="unknown step")
        return trace.steps[step][2]

    @app.get("/belief/{trace_id}/{step}")
    def get_belief(trace_id: int, step: int, format: str = "json"):
        belief = _get_trace_step(trace_id, step)
        if format == "pgm":
            return Response(belief.to_pgm(), media_type="image/x-portable-graymap")
        return belief.to_json_grid()

    @app.post("/plan")
    def post_plan(req: PlanRequest):
        with lock:
            origin = req.start or state["robot"]
        try:
            path = planner.dfs_plan(graph, origin, req.goal)
        except planner.PlanError as e:
            message = str(e)
            if "unknown area" in message:
                raise HTTPException(status_code=404, detail=message)
            raise HTTPException(status_code=409, detail=message)
        return {"plan": path}

    @app.post("/robot/move")
    def post_move(req: MoveRequest):
        """Advance the simulated robot one area along the given plan."""
        if not req.plan:
            raise HTTPException(status_code=400, detail="empty plan")
        for area_id in req.plan:
            if area_id not in graph.nodes:
                raise HTTPException(status_code=404, detail=f"unknown area {area_id!r}")
        with lock:
            current = state["robot"]
            if current in req.plan:
                i = req.plan.index(current)
                if i + 1 < len(req.plan):
                    state["robot"] = req.plan[i + 1]
            else:
                state["robot"] = req.plan[0]
            return {"robot": state["robot"], "arrived": state["robot"] == req.plan[-1]}

    @app.get("/robot")
    def get_robot():
        with lock:
            return {"robot": state["robot"]}

    return app


if __name__ == "__main__":
    sys.exit(main())
