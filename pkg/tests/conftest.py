"""Shared fixtures: synthetic build results and a threaded HTTP server."""

from __future__ import annotations

import threading
import time
from pathlib import Path

import pytest
import uvicorn

from codemap.layout import LayoutConfig
from codemap.pipeline import BuildResult, PipelineConfig, build_map
from corpusgen import write_tree


def make_pipeline_config(seed: int = 0) -> PipelineConfig:
    cfg = PipelineConfig()
    cfg.layout = LayoutConfig(seed=seed, max_iter=600)
    cfg.resolution = 64
    cfg.scene_size = 512
    return cfg


@pytest.fixture(scope="session")
def demo_tree(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("demo_tree")
    write_tree(root, 12, seed=3)
    return root


@pytest.fixture(scope="session")
def demo_build(demo_tree) -> tuple[BuildResult, PipelineConfig, Path]:
    cfg = make_pipeline_config()
    result = build_map(demo_tree, cfg)
    assert result.layout.converged
    return result, cfg, demo_tree


class ServerHandle:
    def __init__(self, server: uvicorn.Server, thread: threading.Thread,
                 port: int):
        self.server = server
        self.thread = thread
        self.port = port
        self.base_url = f"http://127.0.0.1:{port}"

    def stop(self) -> None:
        self.server.should_exit = True
        self.thread.join(timeout=5)


def run_app(app) -> ServerHandle:
    """Serve an ASGI app on an ephemeral port in a daemon thread."""
    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("server failed to start")
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    return ServerHandle(server, thread, port)
