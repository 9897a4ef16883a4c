"""HTTP JSON service that dispenses judging tasks, collects judgments, and
serves plot images plus live tallies to the judging UI.

Single process; judgment writes are serialized through one lock and flushed
to an append-only JSON-lines log before the 201 goes out, so a restart
reconstructs identical tallies from the log alone.
"""

from __future__ import annotations

import hashlib
import json
import logging
import mimetypes
import os
import re
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np

from .errors import MalformedInput, UnknownTask, VizPickError
from .evaluation import (
    JudgmentRecord,
    aggregate_tally,
    metrics,
    validate_judgment,
)
from .pipeline import read_session_recommendations, read_session_tasks

logger = logging.getLogger(__name__)

_IMAGE_NAME = re.compile(r"^[A-Za-z0-9._-]+\.png$")


@dataclass
class ServiceConfig:
    session_dir: Path
    log_path: Path
    port: int = 8765
    host: str = "127.0.0.1"
    static_dir: Path | None = None
    distinct_csi: bool = False


class DuplicateJudgment(VizPickError):
    """Same (judge_id, task_id) was already tallied."""


class ServiceState:
    def __init__(self, cfg: ServiceConfig):
        self.cfg = cfg
        self.tasks = read_session_tasks(cfg.session_dir)
        self.tasks_by_id = {t.id: t for t in self.tasks}
        self.recommendations = read_session_recommendations(cfg.session_dir)
        self.plots_dir = Path(cfg.session_dir) / "plots"
        self.lock = threading.Lock()
        self.judgments: list[JudgmentRecord] = []
        self.answered: set[tuple[str, str]] = set()
        self._orders: dict[str, list[str]] = {}
        self._replay_log()
        self._log = open(cfg.log_path, "ab")

    def _replay_log(self) -> None:
        if not Path(self.cfg.log_path).exists():
            return
        with open(self.cfg.log_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = JudgmentRecord.from_json_dict(json.loads(line))
                    validate_judgment(rec, self.tasks_by_id, self.cfg.distinct_csi)
                except (ValueError, KeyError, VizPickError) as exc:
                    logger.warning("skipping unusable log line: %s", exc)
                    continue
                key = (rec.judge_id, rec.task_id)
                if key in self.answered:
                    continue
                self.judgments.append(rec)
                self.answered.add(key)

    def close(self) -> None:
        self._log.close()

    def judge_order(self, judge_id: str) -> list[str]:
        """Fixed shuffled task order per judge, stable across restarts."""
        if judge_id not in self._orders:
            digest = hashlib.sha256(judge_id.encode("utf-8")).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
            ids = [t.id for t in self.tasks]
            self._orders[judge_id] = [ids[i] for i in rng.permutation(len(ids))]
        return self._orders[judge_id]

    def next_task(self, judge_id: str):
        with self.lock:
            for task_id in self.judge_order(judge_id):
                if (judge_id, task_id) not in self.answered:
                    return self.tasks_by_id[task_id]
        return None

    def submit(self, record: JudgmentRecord) -> None:
        validate_judgment(record, self.tasks_by_id, self.cfg.distinct_csi)
        with self.lock:
            key = (record.judge_id, record.task_id)
            if key in self.answered:
                raise DuplicateJudgment(f"judge {record.judge_id!r} already answered {record.task_id!r}")
            line = json.dumps(record.to_json_dict()) + "\n"
            self._log.write(line.encode("utf-8"))
            self._log.flush()
            os.fsync(self._log.fileno())
            self.judgments.append(record)
            self.answered.add(key)

    def tally(self) -> list[dict]:
        with self.lock:
            snapshot = list(self.judgments)
        return [t.to_json_dict() for t in aggregate_tally(snapshot, self.tasks)]

    def report(self) -> dict:
        with self.lock:
            snapshot = list(self.judgments)
        tallies = aggregate_tally(snapshot, self.tasks)
        golds = {t.table_id: t.preferred for t in tallies}
        scored = {tid: p for tid, p in self.recommendations.items() if tid in golds}
        if not scored:
            return {"n_tables": 0, "metrics": None}
        m = metrics(scored, {tid: golds[tid] for tid in scored})
        return {"n_tables": len(scored), "metrics": m.to_json_dict()}


class _Handler(BaseHTTPRequestHandler):
    state: ServiceState  # assigned by make_server

    def log_message(self, fmt, *args):  # route through logging, not stderr
        logger.debug("%s - %s", self.address_string(), fmt % args)

    def _send_json(self, status: int, payload) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, status: int, message: str) -> None:
        self._send_json(status, {"error": message})

    def do_GET(self) -> None:  # noqa: N802  (http.server API)
        url = urlparse(self.path)
        if url.path == "/api/tasks/next":
            judge = parse_qs(url.query).get("judge", [""])[0]
            if not judge:
                self._send_error_json(400, "missing judge parameter")
                return
            task = self.state.next_task(judge)
            if task is None:
                self.send_response(204)
                self.end_headers()
                return
            self._send_json(200, task.client_dict())
        elif url.path == "/api/tally":
            self._send_json(200, self.state.tally())
        elif url.path == "/api/report":
            self._send_json(200, self.state.report())
        elif url.path.startswith("/plots/"):
            self._serve_plot(url.path[len("/plots/") :])
        else:
            self._serve_static(url.path)

    def _serve_plot(self, name: str) -> None:
        if not _IMAGE_NAME.match(name) or ".." in name:
            self._send_error_json(404, "unknown image")
            return
        path = self.state.plots_dir / name
        if not path.is_file():
            self._send_error_json(404, "unknown image")
            return
        data = path.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", "image/png")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _serve_static(self, path: str) -> None:
        static = self.state.cfg.static_dir
        if static is None:
            if path == "/":
                self._send_json(200, {
                    "service": "vizpick judging service",
                    "endpoints": ["/api/tasks/next?judge=ID", "/api/judgments",
                                  "/api/tally", "/api/report", "/plots/{image_id}.png"],
                })
                return
            self._send_error_json(404, "not found")
            return
        rel = path.lstrip("/") or "index.html"
        target = (Path(static) / rel).resolve()
        if not str(target).startswith(str(Path(static).resolve())) or not target.is_file():
            self._send_error_json(404, "not found")
            return
        data = target.read_bytes()
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_POST(self) -> None:  # noqa: N802
        if urlparse(self.path).path != "/api/judgments":
            self._send_error_json(404, "not found")
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length).decode("utf-8"))
            record = JudgmentRecord.from_json_dict({"timestamp": time.time(), **payload})
        except (ValueError, KeyError, TypeError) as exc:
            self._send_error_json(400, f"malformed judgment payload: {exc}")
            return
        try:
            self.state.submit(record)
        except DuplicateJudgment as exc:
            self._send_error_json(409, str(exc))
            return
        except (MalformedInput, UnknownTask) as exc:
            self._send_error_json(400, str(exc))
            return
        self._send_json(201, record.to_json_dict())


def make_server(cfg: ServiceConfig) -> tuple[ThreadingHTTPServer, ServiceState]:
    state = ServiceState(cfg)
    handler = type("BoundHandler", (_Handler,), {"state": state})
    server = ThreadingHTTPServer((cfg.host, cfg.port), handler)
    return server, state


def serve(cfg: ServiceConfig) -> None:
    """Run the blocking judging service."""
    server, state = make_server(cfg)
    host, port = server.server_address[:2]
    logger.info("judging service listening on http://%s:%s/", host, port)
    try:
        server.serve_forever()
    finally:
        state.close()
        server.server_close()
