"""Job queue and worker loop with at-least-once delivery and bounded retries."""

from __future__ import annotations

import hashlib
import json
import socket
import threading
import time
import uuid
from dataclasses import dataclass, field, replace

from .errors import ContractViolation, NotFoundError, TransportError

DEFAULT_MAX_ATTEMPTS = 3
DEFAULT_VISIBILITY_TIMEOUT = 300.0
DEFAULT_POLL_INTERVAL = 0.1
DEFAULT_IDEMPOTENCY_WINDOW = 300.0

QUEUED = "QUEUED"
RUNNING = "RUNNING"
COMPLETED = "COMPLETED"
FAILED = "FAILED"
DEAD = "DEAD"

JOB_KINDS = ("build_kg", "expand_kg", "preprocess_dump")


@dataclass
class Job:
    job_id: str
    kind: str
    payload: dict
    status: str = QUEUED
    attempts: int = 0
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    error: str | None = None
    created_at: float = field(default_factory=time.time)
    updated_at: float = field(default_factory=time.time)

    def snapshot(self) -> "Job":
        return replace(self, payload=dict(self.payload))


def _fingerprint(kind: str, payload: dict) -> str:
    blob = json.dumps({"kind": kind, "payload": payload},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class JobStore:
    """In-process job status store; per-job writes serialized by one lock."""

    def __init__(self):
        self._jobs: dict[str, Job] = {}
        self._fingerprints: dict[str, tuple[str, float]] = {}
        self._lock = threading.Lock()

    def create(self, job: Job) -> None:
        with self._lock:
            self._jobs[job.job_id] = job

    def get(self, job_id: str) -> Job:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise NotFoundError(f"no job {job_id}")
            return job.snapshot()

    def update(self, job_id: str, **changes) -> Job:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise NotFoundError(f"no job {job_id}")
            for k, v in changes.items():
                setattr(job, k, v)
            job.updated_at = time.time()
            return job.snapshot()

    def remember_fingerprint(self, fp: str, job_id: str) -> None:
        with self._lock:
            self._fingerprints[fp] = (job_id, time.time())

    def recent_duplicate(self, fp: str, window: float) -> str | None:
        with self._lock:
            hit = self._fingerprints.get(fp)
            if hit is None:
                return None
            job_id, when = hit
            if time.time() - when > window:
                return None
            job = self._jobs.get(job_id)
            if job is None or job.status == DEAD:
                return None
            return job_id


class InMemoryBroker:
    """At-least-once queue: popped jobs sit on an in-flight list and are
    redelivered after the visibility timeout unless acknowledged."""

    def __init__(self, visibility_timeout: float = DEFAULT_VISIBILITY_TIMEOUT):
        self.visibility_timeout = visibility_timeout
        self._queue: list[str] = []
        self._inflight: dict[str, tuple[str, float]] = {}  # tag -> (job_id, deadline)
        self._cond = threading.Condition()

    def push(self, job_id: str) -> None:
        with self._cond:
            self._queue.append(job_id)
            self._cond.notify()

    def _requeue_expired(self) -> None:
        now = time.monotonic()
        expired = [tag for tag, (_, deadline) in self._inflight.items()
                   if deadline <= now]
        for tag in expired:
            job_id, _ = self._inflight.pop(tag)
            self._queue.append(job_id)

    def pop(self, timeout: float = 0.0) -> tuple[str, str] | None:
        """Returns (job_id, delivery_tag) or None on timeout."""
        deadline = time.monotonic() + timeout
        with self._cond:
            while True:
                self._requeue_expired()
                if self._queue:
                    job_id = self._queue.pop(0)
                    tag = uuid.uuid4().hex
                    self._inflight[tag] = (job_id, time.monotonic() + self.visibility_timeout)
                    return job_id, tag
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return None
                self._cond.wait(min(remaining, 0.05))

    def ack(self, tag: str) -> None:
        with self._cond:
            self._inflight.pop(tag, None)

    def pending(self) -> int:
        with self._cond:
            self._requeue_expired()
            return len(self._queue) + len(self._inflight)


class RespBroker:
    """Minimal RESP-list adapter (Redis protocol) for deployment parity.

    Queue `edukg:jobs` (LPUSH / RPOP), in-flight list `edukg:inflight`,
    per-job hash `edukg:job:<id>`.
    """

    QUEUE = "edukg:jobs"
    INFLIGHT = "edukg:inflight"

    def __init__(self, url: str = "redis://localhost:6379",
                 visibility_timeout: float = DEFAULT_VISIBILITY_TIMEOUT):
        rest = url.split("://", 1)[-1]
        host, _, port = rest.partition(":")
        self._addr = (host or "localhost", int(port or 6379))
        self.visibility_timeout = visibility_timeout
        self._sock: socket.socket | None = None
        self._lock = threading.Lock()

    def _connect(self) -> socket.socket:
        if self._sock is None:
            try:
                self._sock = socket.create_connection(self._addr, timeout=5.0)
            except OSError as exc:
                raise TransportError(f"broker unreachable at {self._addr}: {exc}") from exc
        return self._sock

    def _command(self, *parts: str):
        with self._lock:
            sock = self._connect()
            msg = f"*{len(parts)}\r\n" + "".join(
                f"${len(p.encode())}\r\n{p}\r\n" for p in parts)
            try:
                sock.sendall(msg.encode())
                return self._read_reply(sock)
            except OSError as exc:
                self._sock = None
                raise TransportError(f"broker I/O error: {exc}") from exc

    def _read_line(self, sock) -> bytes:
        buf = b""
        while not buf.endswith(b"\r\n"):
            chunk = sock.recv(1)
            if not chunk:
                raise TransportError("broker closed connection")
            buf += chunk
        return buf[:-2]

    def _read_reply(self, sock):
        line = self._read_line(sock)
        prefix, rest = line[:1], line[1:]
        if prefix in (b"+", b":"):
            return rest.decode()
        if prefix == b"-":
            raise TransportError(f"broker error: {rest.decode()}")
        if prefix == b"$":
            length = int(rest)
            if length == -1:
                return None
            data = b""
            while len(data) < length + 2:
                data += sock.recv(length + 2 - len(data))
            return data[:-2].decode()
        raise TransportError(f"unexpected reply type: {line!r}")

    def push(self, job_id: str) -> None:
        self._command("LPUSH", self.QUEUE, job_id)

    def pop(self, timeout: float = 0.0) -> tuple[str, str] | None:
        job_id = self._command("RPOPLPUSH", self.QUEUE, self.INFLIGHT)
        if job_id is None:
            return None
        return job_id, job_id  # the job id doubles as the delivery tag

    def ack(self, tag: str) -> None:
        self._command("LREM", self.INFLIGHT, "1", tag)


def enqueue(broker, store: JobStore, kind: str, payload: dict,
            max_attempts: int = DEFAULT_MAX_ATTEMPTS,
            idempotency_window: float = DEFAULT_IDEMPOTENCY_WINDOW) -> str:
    """Persist a job as QUEUED and push it. Duplicate (kind, payload)
    submissions inside the window return the original job id."""
    if kind not in JOB_KINDS:
        raise ContractViolation(f"unknown job kind: {kind!r}")
    if not isinstance(payload, dict):
        raise ContractViolation("payload must be a JSON object")
    fp = _fingerprint(kind, payload)
    existing = store.recent_duplicate(fp, idempotency_window)
    if existing is not None:
        return existing
    job = Job(job_id=uuid.uuid4().hex[:16], kind=kind, payload=payload,
              max_attempts=max_attempts)
    broker.push(job.job_id)  # push first: broker failure leaves nothing persisted
    store.create(job)
    store.remember_fingerprint(fp, job.job_id)
    return job.job_id


def job_status(store: JobStore, job_id: str) -> Job:
    return store.get(job_id)


def worker_run(broker, store: JobStore, handlers: dict,
               shutdown: threading.Event,
               poll_interval: float = DEFAULT_POLL_INTERVAL,
               retry_backoff_base: float = 2.0) -> None:
    """Process jobs until signaled. Handler success completes the job; a
    handler error re-queues until max_attempts, then the job is DEAD."""
    while not shutdown.is_set():
        popped = broker.pop(timeout=poll_interval)
        if popped is None:
            continue
        job_id, tag = popped
        try:
            job = store.get(job_id)
        except NotFoundError:
            broker.ack(tag)
            continue
        if job.status in (COMPLETED, DEAD):
            broker.ack(tag)  # stale redelivery of a finished job
            continue
        handler = handlers.get(job.kind)
        if handler is None:
            store.update(job_id, status=DEAD,
                         error=f"no handler registered for kind {job.kind!r}")
            broker.ack(tag)
            continue
        attempts = job.attempts + 1
        store.update(job_id, status=RUNNING, attempts=attempts)
        try:
            handler(job.payload)
        except Exception as exc:  # noqa: BLE001 - any handler error is a retry
            if attempts >= job.max_attempts:
                store.update(job_id, status=DEAD, error=str(exc))
            else:
                store.update(job_id, status=QUEUED, error=str(exc))
                delay = retry_backoff_base ** attempts if retry_backoff_base > 0 else 0
                if delay:
                    _delayed_push(broker, job_id, min(delay, 60.0))
                else:
                    broker.push(job_id)
            broker.ack(tag)
        else:
            store.update(job_id, status=COMPLETED, error=None)
            broker.ack(tag)


def _delayed_push(broker, job_id: str, delay: float) -> None:
    timer = threading.Timer(delay, broker.push, args=(job_id,))
    timer.daemon = True
    timer.start()


class WorkerPool:
    """N worker threads over one broker/store; used by the service process."""

    def __init__(self, broker, store: JobStore, handlers: dict, size: int = 2,
                 retry_backoff_base: float = 0.05):
        self.broker = broker
        self.store = store
        self.handlers = handlers
        self.shutdown = threading.Event()
        self._threads = [
            threading.Thread(
                target=worker_run,
                args=(broker, store, handlers, self.shutdown),
                kwargs={"retry_backoff_base": retry_backoff_base},
                daemon=True, name=f"edukg-worker-{i}")
            for i in range(size)]

    def start(self) -> None:
        for t in self._threads:
            t.start()

    def stop(self) -> None:
        self.shutdown.set()
        for t in self._threads:
            t.join(timeout=2.0)
