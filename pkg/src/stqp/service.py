"""HTTP session service the rating UI drives.

Each observer walks the plan sequence (training pair first, then the
shuffled main list) through a cursor: `next` idempotently returns the
pending item until its rating arrives, so a stimulus is never issued at
two presentation indexes. Ratings append to the same CSV schema the
offline analysis ingests; training acknowledgments advance the cursor
but are not persisted as ratings.
"""

from __future__ import annotations

import csv
import threading
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from .study import RATINGS_HEADER, SessionPlan, TRAINING_ROLES, write_ratings_header

__all__ = ["SessionState", "create_app", "serve_sessions"]

API_VERSION = 1


class SessionState:
    """Observer cursors over the plan sequence plus the ratings sink."""

    def __init__(self, plan: SessionPlan, media_root: Path, ratings_csv: Path):
        self.plan = plan
        self.media_root = Path(media_root)
        self.ratings_csv = Path(ratings_csv)
        self.sequence = plan.sequence
        self.media_by_id = {}
        for record in self.sequence:
            self.media_by_id.setdefault(record.id, record.media)
        self.lock = threading.Lock()
        self.cursors: dict[str, int] = {}
        if self.ratings_csv.is_file():
            self._resume()
        else:
            self.ratings_csv.parent.mkdir(parents=True, exist_ok=True)
            write_ratings_header(self.ratings_csv)

    def _resume(self) -> None:
        """Rebuild cursors from previously persisted main-phase ratings."""
        counts: dict[str, int] = {}
        with self.ratings_csv.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != RATINGS_HEADER:
                raise ValueError(f"{self.ratings_csv}: unexpected ratings header {header}")
            for row in reader:
                if row:
                    counts[row[0]] = counts.get(row[0], 0) + 1
        for observer, n in counts.items():
            self.cursors[observer] = 2 + n  # training is re-run after a restart

    def media_path(self, stimulus_id: str) -> Path | None:
        media = self.media_by_id.get(stimulus_id)
        if media is None:
            return None
        p = Path(media)
        return p if p.is_absolute() else self.media_root / p

    def pending(self, observer: str) -> tuple[int, object | None]:
        cursor = self.cursors.get(observer, 0)
        if cursor >= len(self.sequence):
            return cursor, None
        return cursor, self.sequence[cursor]

    def submit(self, observer: str, stimulus: str, score: int, index: int) -> tuple[int, str]:
        """Returns (http_status, detail). 200 advances the cursor."""
        with self.lock:
            cursor = self.cursors.get(observer, 0)
            if index < cursor:
                return 409, f"presentation index {index} was already rated"
            if cursor >= len(self.sequence):
                return 409, "session already complete"
            item = self.sequence[cursor]
            if index != cursor or stimulus != item.id:
                return 409, (
                    f"stimulus {stimulus!r} at index {index} is not the issued item "
                    f"({item.id!r} at index {cursor})"
                )
            if item.role not in TRAINING_ROLES:
                stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
                with self.ratings_csv.open("a", newline="") as fh:
                    csv.writer(fh).writerow([observer, stimulus, score, stamp, index])
                    fh.flush()
            self.cursors[observer] = cursor + 1
            return 200, "recorded"


def _parse_range(header: str, size: int) -> tuple[int, int] | None:
    if not header.startswith("bytes="):
        return None
    spec = header[len("bytes="):].strip()
    if "," in spec or "-" not in spec:
        return None
    start_s, _, end_s = spec.partition("-")
    try:
        if start_s == "":
            length = int(end_s)
            if length <= 0:
                return None
            return max(0, size - length), size - 1
        start = int(start_s)
        end = int(end_s) if end_s else size - 1
    except ValueError:
        return None
    if start > end or start >= size:
        return None
    return start, min(end, size - 1)


def create_app(plan: SessionPlan, media_root, ratings_csv, ui_dir=None) -> FastAPI:
    state = SessionState(plan, Path(media_root), Path(ratings_csv))
    app = FastAPI(title="stqp session service")
    app.state.session = state

    if ui_dir is not None:
        from fastapi.responses import RedirectResponse
        from fastapi.staticfiles import StaticFiles

        app.mount("/app", StaticFiles(directory=Path(ui_dir), html=True), name="ui")

        @app.get("/")
        def root():
            return RedirectResponse("/app/")

    @app.get("/api/session")
    def session_meta():
        return {
            "api_version": API_VERSION,
            "scale_labels": list(plan.scale_labels),
            "policies": plan.policies,
            "training_items": 2,
            "main_items": len(plan.items),
            "total_items": len(state.sequence),
            "seed": plan.seed,
        }

    @app.get("/api/session/next")
    def next_item(observer: str = ""):
        if not observer:
            return JSONResponse({"detail": "observer query parameter is required"}, 400)
        cursor, item = state.pending(observer)
        if item is None:
            return {"done": True, "observer": observer, "rated_main": len(plan.items)}
        phase = "training" if item.role in TRAINING_ROLES else "main"
        return {
            "done": False,
            "observer": observer,
            "stimulus_id": item.id,
            "phase": phase,
            "presentation_index": cursor,
            "media_url": f"/media/{item.id}",
            "main_progress": {"rated": max(0, cursor - 2), "total": len(plan.items)},
        }

    @app.post("/api/rating")
    async def post_rating(request: Request):
        body = await request.json()
        observer = body.get("observer")
        stimulus = body.get("stimulus")
        score = body.get("score")
        index = body.get("presentation_index")
        if not observer or not stimulus or not isinstance(index, int):
            return JSONResponse({"detail": "observer, stimulus and presentation_index required"}, 400)
        if not isinstance(score, int) or not 1 <= score <= 5:
            return JSONResponse({"detail": f"score must be an integer in [1, 5], got {score!r}"}, 400)
        status, detail = state.submit(observer, stimulus, score, index)
        return JSONResponse({"detail": detail}, status)

    @app.get("/media/{stimulus_id}")
    def media(stimulus_id: str, request: Request):
        path = state.media_path(stimulus_id)
        if path is None or not path.is_file():
            return JSONResponse({"detail": f"unknown stimulus {stimulus_id!r}"}, 404)
        size = path.stat().st_size
        range_header = request.headers.get("range")
        headers = {"Accept-Ranges": "bytes"}
        if range_header:
            rng = _parse_range(range_header, size)
            if rng is None:
                return Response(status_code=416, headers={"Content-Range": f"bytes */{size}"})
            start, end = rng
            with path.open("rb") as fh:
                fh.seek(start)
                chunk = fh.read(end - start + 1)
            headers["Content-Range"] = f"bytes {start}-{end}/{size}"
            return Response(chunk, 206, headers=headers, media_type="application/octet-stream")
        return Response(path.read_bytes(), 200, headers=headers, media_type="application/octet-stream")

    return app


def serve_sessions(
    plan: SessionPlan, media_root, ratings_csv, host="127.0.0.1", port=8000, ui_dir=None
):
    """Run the session service until interrupted."""
    import uvicorn

    app = create_app(plan, media_root, ratings_csv, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
