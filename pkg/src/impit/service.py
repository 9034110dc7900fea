"""HTTP JSON API exposing the pipeline as stateful sessions.

A session holds named signals, episode sets, index series and calibration
jobs. Everything is synchronous except calibration, which runs on a small
worker pool and is polled by job id. Every response carries a stable
``schema_version`` so clients can detect contract changes.

Run with::

    uvicorn impit.service:app --port 8000

or programmatically via :func:`create_app` (used by the tests).
"""

from __future__ import annotations

import datetime as dt
import secrets
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional

from fastapi import Body, FastAPI, Request
from fastapi.responses import JSONResponse

from . import calibrate as cal
from . import episodes as epi
from . import index as idx
from . import stats as st
from .cli import _parse_schedule
from .errors import DomainError, ImpitError, ValidationError
from .intensity import IntensityKind
from .timeline import Resolution, Season, ingest_signal
from .weights import WeightParams

SCHEMA_VERSION = 1


class NotFound(Exception):
    pass


class Conflict(Exception):
    pass


@dataclass
class CalibrationJob:
    id: str
    status: str = "queued"  # queued | running | done | error
    cal_map: Optional[cal.CalibrationMap] = None
    error: Optional[str] = None
    selection: Optional[cal.Selection] = None


@dataclass
class Session:
    id: str
    created: float
    ttl: float
    signals: Dict[str, object] = field(default_factory=dict)
    episode_sets: Dict[str, object] = field(default_factory=dict)
    indexes: Dict[str, object] = field(default_factory=dict)
    jobs: Dict[str, CalibrationJob] = field(default_factory=dict)
    lock: threading.RLock = field(default_factory=threading.RLock)

    @property
    def expired(self) -> bool:
        return time.monotonic() - self.created > self.ttl


def _payload(**data) -> dict:
    data["schema_version"] = SCHEMA_VERSION
    return data


def _error_response(status: int, reason: str, detail: str, **extra) -> JSONResponse:
    body = _payload(error={"reason": reason, "detail": detail, **extra})
    return JSONResponse(status_code=status, content=body)


def _require_fields(body: dict, *names):
    missing = [n for n in names if body.get(n) is None]
    if missing:
        raise ValidationError(f"missing required fields: {', '.join(missing)}")


def _csv_to_tempfile(text: str, suffix: str = ".csv") -> str:
    handle = tempfile.NamedTemporaryFile(
        "w", suffix=suffix, delete=False, encoding="utf-8"
    )
    with handle as fh:
        fh.write(text)
    return handle.name


def _iso(d: dt.date) -> str:
    return d.isoformat()


def _episode_dict(e: epi.Episode) -> dict:
    return {
        "id": e.id,
        "start": _iso(e.start_ts),
        "end": _iso(e.end_ts),
        "n": e.n,
        "tau": e.tau,
        "ongoing": e.ongoing,
        "intensity_mean": None if e.intensity_mean is None else float(e.intensity_mean),
    }


def _episode_set_summary(name: str, es: epi.EpisodeSet) -> dict:
    return {
        "name": name,
        "source": es.source,
        "count": len(es),
        "season": str(es.season) if es.season else None,
    }


def _schedule_from_body(spec) -> idx.EvaluationSchedule:
    """Accepts the CLI anchor syntax or a JSON list of date strings."""
    if isinstance(spec, (list, tuple)):
        spec = ",".join(str(s) for s in spec)
    return _parse_schedule(str(spec))


def _response_from_body(body: dict) -> st.ResponseSeries:
    spec = body.get("response")
    if spec is None:
        raise ValidationError("missing required fields: response")
    transform = "log" if body.get("log_response") else "none"
    if isinstance(spec, str):
        path = _csv_to_tempfile(spec)
        return st.load_response(path, transform=transform, label="upload")
    raise ValidationError("response must be a CSV string with timestamp,value columns")


def create_app(ttl_seconds: float = 3600.0, max_workers: int = 4) -> FastAPI:
    app = FastAPI(title="episodic index service")
    sessions: Dict[str, Session] = {}
    store_lock = threading.Lock()
    pool = ThreadPoolExecutor(max_workers=max_workers)

    def purge_expired():
        with store_lock:
            for sid in [s for s, sess in sessions.items() if sess.expired]:
                del sessions[sid]

    def get_session(sid: str) -> Session:
        purge_expired()
        with store_lock:
            sess = sessions.get(sid)
        if sess is None:
            raise NotFound(f"unknown session {sid!r}")
        return sess

    @app.exception_handler(NotFound)
    async def _nf(request: Request, exc: NotFound):
        return _error_response(404, "not_found", str(exc))

    @app.exception_handler(Conflict)
    async def _conflict(request: Request, exc: Conflict):
        return _error_response(409, "duplicate_name", str(exc))

    @app.exception_handler(DomainError)
    async def _domain(request: Request, exc: DomainError):
        return _error_response(422, exc.reason, str(exc))

    @app.exception_handler(ImpitError)
    async def _impit(request: Request, exc: ImpitError):
        return _error_response(400, exc.reason, str(exc))

    @app.post("/sessions")
    def create_session():
        sid = secrets.token_hex(8)
        with store_lock:
            sessions[sid] = Session(id=sid, created=time.monotonic(), ttl=ttl_seconds)
        return _payload(id=sid)

    @app.post("/sessions/{sid}/signals")
    def upload_signal(sid: str, body: dict = Body(...)):
        sess = get_session(sid)
        _require_fields(body, "name", "csv")
        name = body["name"]
        resolution = body.get("resolution", "monthly")
        path = _csv_to_tempfile(body["csv"])
        signal = ingest_signal(path, resolution=resolution, name=name)
        with sess.lock:
            if name in sess.signals:
                raise Conflict(f"signal {name!r} already exists")
            sess.signals[name] = signal
        return _payload(
            name=name,
            resolution=resolution,
            observations=len(signal.values),
            start=_iso(signal.start),
            end=_iso(signal.end),
        )

    def _signal_of(sess: Session, name: str):
        with sess.lock:
            signal = sess.signals.get(name)
        if signal is None:
            raise NotFound(f"unknown signal {name!r}")
        return signal

    def _episodes_of(sess: Session, name: str) -> epi.EpisodeSet:
        with sess.lock:
            es = sess.episode_sets.get(name)
        if es is None:
            raise NotFound(f"unknown episode set {name!r}")
        return es

    @app.post("/sessions/{sid}/episodes")
    def define_episodes(sid: str, body: dict = Body(...)):
        sess = get_session(sid)
        _require_fields(body, "name", "method")
        name = body["name"]
        method = body["method"]
        season = Season.parse(body["season"]) if body.get("season") else None
        if method == "threshold":
            _require_fields(body, "signal", "threshold")
            signal = _signal_of(sess, body["signal"])
            es = epi.extract_threshold(
                signal, float(body["threshold"]), body.get("direction", "up"),
                int(body.get("min_duration", 1)), season,
            )
        elif method == "climatology":
            _require_fields(body, "signal", "baseline")
            signal = _signal_of(sess, body["signal"])
            baseline = tuple(int(y) for y in body["baseline"])
            es = epi.extract_climatology(
                signal, baseline, float(body.get("percentile", 90.0)),
                int(body.get("min_duration", 1)), season,
            )
        elif method == "periodic":
            _require_fields(body, "signal", "season")
            signal = _signal_of(sess, body["signal"])
            es = epi.extract_periodic(signal, season)
        elif method == "load":
            _require_fields(body, "csv")
            path = _csv_to_tempfile(body["csv"])
            signal = _signal_of(sess, body["signal"]) if body.get("signal") else None
            resolution = (
                None if signal is not None
                else Resolution.parse(body.get("resolution", "monthly"))
            )
            es = epi.load_episodes(path, season=season, signal=signal,
                                   resolution=resolution)
        else:
            raise ValidationError(f"unknown episode method {method!r}")
        with sess.lock:
            if name in sess.episode_sets:
                raise Conflict(f"episode set {name!r} already exists")
            sess.episode_sets[name] = es
        return _payload(**_episode_table(name, es))

    def _episode_table(name: str, es: epi.EpisodeSet) -> dict:
        table = [_episode_dict(e) for e in es.episodes]
        lollipop = [
            {
                "id": e.id,
                "start": _iso(e.start_ts),
                "intensity_mean": (
                    float(e.intensity_mean) if e.intensity_mean is not None
                    else (sum(e.values) / len(e.values) if e.values else None)
                ),
                "duration": e.n,
                "in_season": e.tau > 0,
            }
            for e in es.episodes
        ]
        return dict(**_episode_set_summary(name, es), episodes=table,
                    lollipop=lollipop)

    @app.get("/sessions/{sid}/episodes/{name}")
    def episode_table(sid: str, name: str):
        sess = get_session(sid)
        es = _episodes_of(sess, name)
        return _payload(**_episode_table(name, es))

    @app.post("/sessions/{sid}/index")
    def build_index(sid: str, body: dict = Body(...)):
        sess = get_session(sid)
        _require_fields(body, "name", "episodes", "params", "anchors")
        name = body["name"]
        es = _episodes_of(sess, body["episodes"])
        p = body["params"]
        timing_season = (
            Season.parse(body["timing_season"]) if body.get("timing_season") else None
        )
        params = WeightParams(
            m=int(p["m"]), a=float(p.get("a", 0.0)), b=float(p.get("b", 0.0)),
            c=float(p.get("c", 0.5)), d=float(p.get("d", 1.0)),
            timing_enabled=timing_season is not None,
        )
        kind = IntensityKind.parse(body.get("kind", "mean"))
        schedule = _schedule_from_body(body["anchors"])
        series = idx.evaluate(
            es, params, kind, schedule,
            season=timing_season or es.season, edge=body.get("edge", "truncate"),
        )
        with sess.lock:
            if name in sess.indexes:
                raise Conflict(f"index {name!r} already exists")
            sess.indexes[name] = series
        return _payload(
            name=name,
            anchors=[_iso(a) for a in series.anchors],
            values=[float(v) for v in series.values],
            episode_counts=[len(d) for d in series.diagnostics],
        )

    @app.get("/sessions/{sid}/index/{name}")
    def index_table(sid: str, name: str):
        sess = get_session(sid)
        with sess.lock:
            series = sess.indexes.get(name)
        if series is None:
            raise NotFound(f"unknown index {name!r}")
        return _payload(
            name=name,
            anchors=[_iso(a) for a in series.anchors],
            values=[float(v) for v in series.values],
            episode_counts=[len(d) for d in series.diagnostics],
        )

    def _record_dict(rec: cal.MapRecord) -> dict:
        return {
            "m": rec.m, "a": rec.a, "b": rec.b, "c": rec.c, "d": rec.d,
            "r": rec.r, "p": rec.p, "n": rec.n,
            "defined": rec.defined, "reason": rec.reason,
        }

    @app.post("/sessions/{sid}/calibrate")
    def start_calibration(sid: str, body: dict = Body(...)):
        sess = get_session(sid)
        _require_fields(body, "stage", "episodes", "m_list", "response", "anchors")
        es = _episodes_of(sess, body["episodes"])
        stage = f"S{int(body['stage'])}"
        season = Season.parse(body["season"]) if body.get("season") else None
        spec = cal.StageSpec(
            stage=stage,
            m_list=tuple(int(m) for m in body["m_list"]),
            a_grid=tuple(float(x) for x in body["a_grid"]) if body.get("a_grid")
            else cal.DEFAULT_A_GRID,
            a=float(body.get("a", 0.0)),
            b_grid=tuple(float(x) for x in body["b_grid"]) if body.get("b_grid")
            else cal.DEFAULT_B_GRID,
            c_grid=tuple(float(x) for x in body["c_grid"]) if body.get("c_grid")
            else cal.DEFAULT_C_GRID,
            d_grid=tuple(float(x) for x in body["d_grid"]) if body.get("d_grid")
            else cal.DEFAULT_D_GRID,
            season=season,
            edge=body.get("edge", "truncate"),
        )
        kind = IntensityKind.parse(body.get("kind", "mean"))
        schedule = _schedule_from_body(body["anchors"])
        response = _response_from_body(body)
        jobs = max(1, int(body.get("jobs", 1)))

        job = CalibrationJob(id=secrets.token_hex(8))
        with sess.lock:
            sess.jobs[job.id] = job

        def work():
            job.status = "running"
            try:
                cal_map = cal.run_stage(spec, es, kind, schedule, response, jobs=jobs)
            except ImpitError as exc:
                job.error = str(exc)
                job.status = "error"
                return
            job.cal_map = cal_map
            job.status = "done"

        pool.submit(work)
        return _payload(job=job.id, status=job.status)

    def _job_of(sess: Session, job_id: str) -> CalibrationJob:
        with sess.lock:
            job = sess.jobs.get(job_id)
        if job is None:
            raise NotFound(f"unknown calibration job {job_id!r}")
        return job

    @app.get("/sessions/{sid}/calibrate/{job_id}")
    def poll_calibration(sid: str, job_id: str):
        sess = get_session(sid)
        job = _job_of(sess, job_id)
        out = {"job": job.id, "status": job.status}
        if job.status == "error":
            out["error"] = job.error
        if job.status == "done":
            out["records"] = [_record_dict(r) for r in job.cal_map.records]
            out["stage"] = job.cal_map.stage
            out["fixed"] = job.cal_map.fixed
            if job.selection is not None:
                out["selection"] = job.selection.to_dict()
        return _payload(**out)

    @app.post("/sessions/{sid}/calibrate/{job_id}/select")
    def record_selection(sid: str, job_id: str, body: dict = Body(...)):
        sess = get_session(sid)
        job = _job_of(sess, job_id)
        if job.status != "done":
            raise ValidationError(
                f"cannot select from a job in state {job.status!r}"
            )
        rationale = body.get("rationale", "")
        if body.get("rule", "max_abs_r") == "manual" and not rationale:
            raise ValidationError("manual selection requires a rationale")
        selection = cal.select(
            job.cal_map,
            rule=body.get("rule", "max_abs_r"),
            stability_radius=int(body.get("stability_radius", 1)),
            manual_config=body.get("manual_config"),
            rationale=rationale,
        )
        with sess.lock:
            job.selection = selection
        return _payload(selection=selection.to_dict())

    @app.post("/sessions/{sid}/associate")
    def associate(sid: str, body: dict = Body(...)):
        sess = get_session(sid)
        _require_fields(body, "index")
        with sess.lock:
            series = sess.indexes.get(body["index"])
        if series is None:
            raise NotFound(f"unknown index {body['index']!r}")
        response = _response_from_body(body)
        join = st.align(series, response)
        assoc = st.pearson(join.pairs)
        report = assoc.to_dict()
        report["dropped_left"] = join.dropped_left
        report["dropped_right"] = join.dropped_right
        return _payload(
            association=report,
            scatter=[{"x": x, "y": y} for x, y in join.pairs],
        )

    return app


app = create_app()
