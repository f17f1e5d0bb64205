"""HTTP service: snapshots, search, callers, sessions, presence, anchors.

One immutable snapshot is published at a time; anchor posts warm-start a
re-layout and swap in a new snapshot under the state lock. Events fan out to
subscriber queues so a slow stream consumer never blocks a writer.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import (
    FileResponse,
    JSONResponse,
    PlainTextResponse,
    StreamingResponse,
)

from .pipeline import AnchorError, BuildResult, PipelineConfig, relayout
from .scene import flow_map, heat_layer, overlay_layer

logger = logging.getLogger(__name__)

USER_COLORS = (
    "#e6194b", "#3cb44b", "#4363d8", "#f58231",
    "#911eb4", "#46f0f0", "#f032e6", "#bcf60c",
)

SCHEMA_VERSION = 1


@dataclass
class Session:
    session_id: str
    user: str
    color: str
    visits: list[tuple[int, int]] = field(default_factory=list)
    open_files: set[str] = field(default_factory=set)
    last_seen: float = 0.0


class EventBroker:
    """Fan-out of server-push events to per-client queues."""

    def __init__(self):
        self._clients: dict[int, queue.Queue] = {}
        self._next_id = 0
        self._lock = threading.Lock()

    def subscribe(self) -> tuple[int, queue.Queue]:
        with self._lock:
            cid = self._next_id
            self._next_id += 1
            q: queue.Queue = queue.Queue()
            self._clients[cid] = q
            return cid, q

    def unsubscribe(self, cid: int) -> None:
        with self._lock:
            self._clients.pop(cid, None)

    def publish(self, event: str, payload: dict) -> None:
        with self._lock:
            targets = list(self._clients.values())
        for q in targets:
            q.put((event, payload))


class ServiceState:
    def __init__(self, result: BuildResult, cfg: PipelineConfig,
                 root: Path | None, presence_expiry: float,
                 keep_alive: float):
        self.lock = threading.Lock()
        self.result = result
        self.cfg = cfg
        self.root = Path(root) if root is not None else None
        self.version = 1
        self.sessions: dict[str, Session] = {}
        self.session_count = 0
        self.visit_seq = 0
        self.broker = EventBroker()
        self.presence_expiry = presence_expiry
        self.keep_alive = keep_alive
        self.last_anchor_blob: str | None = None

    # ------------------------------------------------------------ queries --

    def doc_by_path(self, path: str):
        return self.result.corpus.doc_by_path(path)

    def position_of(self, doc_id: int) -> tuple[float, float]:
        x, y = self.result.layout.positions[doc_id]
        return float(x), float(y)

    def live_sessions(self) -> list[Session]:
        now = time.monotonic()
        return [s for s in sorted(self.sessions.values(),
                                  key=lambda s: s.session_id)
                if now - s.last_seen <= self.presence_expiry]

    def presence_payload(self) -> dict:
        return {
            "version": self.version,
            "sessions": [{
                "session_id": s.session_id,
                "user": s.user,
                "color": s.color,
                "open_files": sorted(s.open_files),
            } for s in self.live_sessions()],
        }

    def merged_heat(self) -> dict[int, float]:
        merged: dict[int, float] = {}
        for s in self.live_sessions():
            for doc_id, heat in heat_layer(s.visits).items():
                merged[doc_id] = max(merged.get(doc_id, 0.0), heat)
        return merged

    def map_payload(self) -> dict:
        scene_json = self.result.scene.to_jsonable()
        corpus = self.result.corpus
        grid = self.result.grid
        for layer in scene_json["layers"]:
            if layer["kind"] == "markers":
                markers = []
                for s in self.live_sessions():
                    for path in sorted(s.open_files):
                        doc = corpus.doc_by_path(path)
                        if doc is None:
                            continue
                        x, y = self.position_of(doc.id)
                        markers.append({"session_id": s.session_id,
                                        "user": s.user, "color": s.color,
                                        "path": path, "x": x, "y": y,
                                        "title": f"{s.user}: {path}"})
                layer["payload"] = {"markers": markers}
            elif layer["kind"] == "heat":
                entries = {}
                for doc_id, heat in sorted(self.merged_heat().items()):
                    x, y = self.position_of(doc_id)
                    sigma = (float(grid.sigmas[doc_id])
                             if doc_id < len(grid.sigmas) else 0.01)
                    entries[str(doc_id)] = {"heat": heat, "x": x, "y": y,
                                            "sigma": sigma}
                layer["payload"] = {"entries": entries}
        return {
            "schema": SCHEMA_VERSION,
            "version": self.version,
            "stress": self.result.layout.stress,
            "seed": self.result.layout.seed,
            "anchors": {p: list(xy)
                        for p, xy in sorted(self.result.layout.anchors.items())},
            "paths": [doc.path for doc in corpus.documents],
            "layout": self.result.layout.to_jsonable(),
            "scene": scene_json,
        }


def create_app(result: BuildResult, cfg: PipelineConfig,
               root: str | Path | None = None,
               presence_expiry: float = 60.0,
               keep_alive: float = 15.0,
               static_dir: str | Path | None = None) -> FastAPI:
    state = ServiceState(result, cfg, root if root is None else Path(root),
                         presence_expiry, keep_alive)
    app = FastAPI(title="codemap", version="0.1.0")
    app.state.service = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    # ----------------------------------------------------------- map --

    @app.get("/map")
    def get_map() -> JSONResponse:
        with state.lock:
            return JSONResponse(state.map_payload())

    @app.get("/search")
    def search(q: str = Query(default="")) -> JSONResponse:
        if not q.strip():
            raise HTTPException(status_code=400, detail="empty query")
        needle = q.strip().lower()
        values: dict[int, float] = {}
        with state.lock:
            corpus = state.result.corpus
            for doc in corpus.documents:
                score = float(doc.tokens.get(needle, 0))
                if needle in doc.path.lower():
                    score = max(score, 1.0)
                if score > 0:
                    values[doc.id] = score
            payload = overlay_layer(values, "sequential")
            for doc_id_str, entry in payload["entries"].items():
                x, y = state.position_of(int(doc_id_str))
                entry["x"], entry["y"] = x, y
                entry["path"] = corpus.documents[int(doc_id_str)].path
            return JSONResponse({"query": q, "count": len(values),
                                 "overlay": payload})

    @app.get("/callers")
    def callers(path: str = Query(...)) -> JSONResponse:
        with state.lock:
            doc = state.doc_by_path(path)
            if doc is None:
                raise HTTPException(status_code=404, detail="unknown path")
            incoming = sorted(s for (s, t) in state.result.graph.edges
                              if t == doc.id)
            if not incoming:
                return JSONResponse({"path": path, "no_callers": True,
                                     "count": 0, "tree": None})
            source = state.position_of(doc.id)
            targets = [state.position_of(s) for s in incoming]
            tree = flow_map(source, targets)
            return JSONResponse({"path": path, "no_callers": False,
                                 "count": len(incoming),
                                 "caller_paths": [
                                     state.result.corpus.documents[s].path
                                     for s in incoming],
                                 "tree": tree.to_jsonable()})

    @app.get("/file")
    def get_file(path: str = Query(...)):
        with state.lock:
            root_dir = state.root
            doc = state.doc_by_path(path)
        if root_dir is None:
            raise HTTPException(status_code=404, detail="no source root")
        resolved = (root_dir / path).resolve()
        if not resolved.is_relative_to(root_dir.resolve()):
            raise HTTPException(status_code=403, detail="path_traversal")
        if doc is None:
            raise HTTPException(status_code=404, detail="unknown path")
        try:
            text = resolved.read_text(encoding="utf-8", errors="replace")
        except OSError:
            return JSONResponse({"error": "stale_snapshot", "path": path},
                                status_code=410)
        return PlainTextResponse(text)

    # ------------------------------------------------------- sessions --

    @app.post("/session")
    def open_session(body: dict) -> JSONResponse:
        user = str(body.get("user", "anonymous"))
        with state.lock:
            color = USER_COLORS[state.session_count % len(USER_COLORS)]
            state.session_count += 1
            sid = uuid.uuid4().hex
            state.sessions[sid] = Session(session_id=sid, user=user,
                                          color=color,
                                          last_seen=time.monotonic())
        return JSONResponse({"session_id": sid, "user": user, "color": color})

    def _session_or_404(sid: str) -> Session:
        session = state.sessions.get(sid)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.post("/session/{sid}/open")
    def open_file(sid: str, body: dict) -> JSONResponse:
        path = str(body.get("path", ""))
        with state.lock:
            session = _session_or_404(sid)
            doc = state.doc_by_path(path)
            if doc is None:
                raise HTTPException(status_code=404, detail="unknown path")
            state.visit_seq += 1
            session.visits.append((doc.id, state.visit_seq))
            session.open_files.add(path)
            session.last_seen = time.monotonic()
            presence = state.presence_payload()
            heat = {"version": state.version,
                    "entries": {str(k): v
                                for k, v in sorted(state.merged_heat().items())}}
        state.broker.publish("presence", presence)
        state.broker.publish("heat", heat)
        return JSONResponse({"ok": True, "version": presence["version"]})

    @app.post("/session/{sid}/close")
    def close_file(sid: str, body: dict) -> JSONResponse:
        path = str(body.get("path", ""))
        with state.lock:
            session = _session_or_404(sid)
            session.open_files.discard(path)
            session.last_seen = time.monotonic()
            presence = state.presence_payload()
        state.broker.publish("presence", presence)
        return JSONResponse({"ok": True, "version": presence["version"]})

    # -------------------------------------------------------- anchors --

    @app.post("/anchors")
    def post_anchors(body: dict) -> JSONResponse:
        blob = json.dumps(body, sort_keys=True, separators=(",", ":"))
        with state.lock:
            if blob == state.last_anchor_blob:
                return JSONResponse({"version": state.version,
                                     "changed": False})
            try:
                new_result = relayout(state.result, state.cfg, body)
            except AnchorError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            state.result = new_result
            state.version += 1
            state.last_anchor_blob = blob
            version = state.version
            stress = new_result.layout.stress
        state.broker.publish("relayout", {"version": version})
        return JSONResponse({"version": version, "changed": True,
                             "stress": stress})

    # --------------------------------------------------------- events --

    @app.get("/events")
    def events(request: Request) -> StreamingResponse:
        def stream():
            cid, q = state.broker.subscribe()
            try:
                yield f": connected version={state.version}\n\n"
                while True:
                    try:
                        event, payload = q.get(timeout=state.keep_alive)
                    except queue.Empty:
                        yield ": keep-alive\n\n"
                        continue
                    data = json.dumps(payload, sort_keys=True)
                    yield f"event: {event}\ndata: {data}\n\n"
            finally:
                state.broker.unsubscribe(cid)

        return StreamingResponse(stream(), media_type="text/event-stream",
                                 headers={"Cache-Control": "no-cache"})

    # ---------------------------------------------------------- index --

    static_root = Path(static_dir) if static_dir else None

    @app.get("/")
    def index():
        if static_root is not None and (static_root / "index.html").exists():
            return FileResponse(static_root / "index.html")
        return JSONResponse({
            "name": "codemap",
            "schema": SCHEMA_VERSION,
            "version": state.version,
            "documents": len(state.result.corpus.documents),
            "endpoints": ["/map", "/search?q=", "/callers?path=",
                          "/file?path=", "/events", "/session",
                          "/session/{id}/open", "/session/{id}/close",
                          "/anchors"],
        })

    if static_root is not None and static_root.is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/static", StaticFiles(directory=static_root), name="static")

    return app
