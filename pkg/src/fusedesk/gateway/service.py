"""HTTP gateway: REST endpoints plus a server-sent-events stream.

One mutation lock per project gives a total order over writes; reads see
consistent snapshots. Stream fan-out is decoupled from the engine through
bounded per-subscriber queues; a subscriber that falls behind is dropped
with a terminal event rather than blocking a run.
"""

from __future__ import annotations

import json
import queue
import threading
from pathlib import Path
from typing import Any, Iterator, Optional

from fastapi import Body, FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse, Response, StreamingResponse

from ..definitions import (
    ComplexEventDefinition,
    compile_definition,
    validate,
)
from ..engine import Engine
from ..errors import (
    FusedeskError,
    InvalidScenarioError,
    NoSuchMarkingError,
    StoreCorruptError,
    UnknownFeedError,
    UnmappedConceptError,
)
from ..explain import explain
from ..feeds import FeedState, RegularMarking, SimpleEvent
from ..graph import (
    Concept,
    deserialize,
    palette_to_json,
    serialize,
)
from ..jsonutil import dumps_canonical
from ..simulate import validate_scenario
from .runner import RunConfig, run_scenario
from .store import ProjectStore

STREAM_QUEUE_SIZE = 512
HEARTBEAT_SECONDS = 0.5


class _Subscriber:
    def __init__(self) -> None:
        self.queue: "queue.Queue[dict[str, Any]]" = queue.Queue(STREAM_QUEUE_SIZE)
        self.dropped = False


class StreamHub:
    """Per-project fan-out with a project-wide monotone sequence."""

    def __init__(self) -> None:
        self.lock = threading.Lock()
        self.sequence = 0
        self.subscribers: list[_Subscriber] = []

    def publish(self, kind: str, payload: dict[str, Any]) -> None:
        with self.lock:
            self.sequence += 1
            message = {"kind": kind, "sequence": self.sequence, "payload": payload}
            for subscriber in self.subscribers:
                if subscriber.dropped:
                    continue
                try:
                    subscriber.queue.put_nowait(message)
                except queue.Full:
                    subscriber.dropped = True

    def subscribe(self) -> _Subscriber:
        subscriber = _Subscriber()
        with self.lock:
            self.subscribers.append(subscriber)
        return subscriber

    def unsubscribe(self, subscriber: _Subscriber) -> None:
        with self.lock:
            if subscriber in self.subscribers:
                self.subscribers.remove(subscriber)


class ProjectRuntime:
    """In-memory view of one project, rebuilt from the store on startup."""

    def __init__(self, store: ProjectStore, name: str):
        self.store = store
        self.name = name
        self.lock = threading.RLock()
        self.hub = StreamHub()
        self.palette = store.load_palette(name)
        self.graph = store.load_graph(name, self.palette)
        self.definitions: dict[str, ComplexEventDefinition] = {}
        for item in store.load_definitions(name):
            definition = ComplexEventDefinition.from_json(item)
            self.definitions[definition.name] = definition
        self.feed_state = FeedState()
        self.feed_state.load_markings(store.load_markings(name))
        self.feed_state.class_to_concept = store.load_mapping(name)
        self.feed_state.load_events(
            SimpleEvent.from_json(item) for item in store.read_events(name)
        )
        self.last_engine: Optional[Engine] = None

    def persist_markings(self) -> None:
        self.store.save_markings(self.name, self.feed_state.markings_json())

    def persist_definitions(self) -> None:
        self.store.save_definitions(
            self.name, [d.to_json() for d in self.definitions.values()]
        )


def create_app(data_dir: str | Path) -> FastAPI:
    store = ProjectStore(Path(data_dir))
    app = FastAPI(title="fusedesk gateway")
    runtimes: dict[str, ProjectRuntime] = {}
    runtimes_lock = threading.Lock()

    def runtime(project: str) -> ProjectRuntime:
        with runtimes_lock:
            if project not in runtimes:
                try:
                    runtimes[project] = ProjectRuntime(store, project)
                except StoreCorruptError as exc:
                    raise HTTPException(500, detail=str(exc)) from None
                except ValueError as exc:
                    raise HTTPException(400, detail=str(exc)) from None
            return runtimes[project]

    app.state.store = store
    app.state.runtime = runtime

    @app.get("/api/health")
    def health() -> dict[str, str]:
        return {"status": "ok"}

    @app.get("/api/projects/{project}/graph")
    def get_graph(project: str) -> Response:
        rt = runtime(project)
        with rt.lock:
            return Response(serialize(rt.graph), media_type="application/json")

    @app.put("/api/projects/{project}/graph")
    async def put_graph(project: str, request: Request) -> dict[str, Any]:
        from starlette.concurrency import run_in_threadpool

        body = await request.body()

        def work() -> dict[str, Any]:
            rt = runtime(project)
            try:
                graph = deserialize(body.decode("utf-8"))
            except FusedeskError as exc:
                raise HTTPException(400, detail=str(exc)) from None
            with rt.lock:
                rt.graph = graph
                store.save_graph(project, graph)
                return {
                    "projectId": graph.project_id,
                    "nodes": len(graph.nodes),
                    "edges": len(graph.edges),
                }

        return await run_in_threadpool(work)

    @app.get("/api/projects/{project}/palette")
    def get_palette(project: str) -> Any:
        rt = runtime(project)
        with rt.lock:
            return palette_to_json(rt.palette)

    @app.post("/api/projects/{project}/palette/concepts")
    def post_concept(project: str, body: dict[str, Any] = Body(...)) -> Any:
        rt = runtime(project)
        with rt.lock:
            try:
                concept = Concept(
                    name=body["name"],
                    parent=body.get("parent", "thing"),
                    property_schema=tuple(
                        (item["key"], item["valueKind"])
                        for item in body.get("propertySchema", [])
                    ),
                )
                rt.palette = rt.palette.add_concept(concept)
            except KeyError as exc:
                raise HTTPException(400, detail=f"missing field {exc}") from None
            except FusedeskError as exc:
                raise HTTPException(409, detail=str(exc)) from None
            store.save_palette(project, rt.palette)
            return palette_to_json(rt.palette)

    @app.get("/api/projects/{project}/definitions")
    def get_definitions(project: str) -> list[dict[str, Any]]:
        rt = runtime(project)
        with rt.lock:
            return [d.to_json() for d in rt.definitions.values()]

    @app.post("/api/projects/{project}/definitions")
    def post_definition(project: str, body: dict[str, Any] = Body(...)) -> Any:
        rt = runtime(project)
        with rt.lock:
            try:
                definition = ComplexEventDefinition.from_json(body)
            except (KeyError, TypeError) as exc:
                raise HTTPException(400, detail=f"malformed definition: {exc}") from None
            violations = validate(definition)
            if violations:
                raise HTTPException(400, detail={"violations": violations})
            try:
                fragment = compile_definition(
                    definition, rt.palette, rt.feed_state.class_to_concept
                )
            except UnmappedConceptError as exc:
                raise HTTPException(400, detail=str(exc)) from None
            rt.definitions[definition.name] = definition
            rt.persist_definitions()
            rt.hub.publish("definition_changed", {"name": definition.name})
            return {
                **definition.to_json(),
                "fragment": fragment.text,
                "checksum": fragment.checksum,
            }

    @app.post("/api/projects/{project}/feeds/{feed}/regular")
    def post_marking(project: str, feed: str, body: dict[str, Any] = Body(...)) -> Any:
        rt = runtime(project)
        with rt.lock:
            try:
                marking = RegularMarking(
                    feed_id=feed,
                    class_label=body["classLabel"],
                    context=body.get("context", "any"),
                    marked_by=body.get("markedBy", "operator"),
                    marked_at=float(body.get("markedAt", 0.0)),
                )
            except (KeyError, FusedeskError) as exc:
                raise HTTPException(400, detail=str(exc)) from None
            rt.feed_state.mark_regular(marking)
            rt.persist_markings()
            rt.hub.publish(
                "marking_changed",
                {
                    "feedId": feed,
                    "classLabel": marking.class_label,
                    "context": marking.context,
                    "marked": True,
                    "version": rt.feed_state.version,
                },
            )
            return {"marking": marking.to_json(), "version": rt.feed_state.version}

    @app.delete("/api/projects/{project}/feeds/{feed}/regular")
    def delete_marking(
        project: str,
        feed: str,
        classLabel: str = Query(...),
        context: str = Query("any"),
    ) -> Any:
        rt = runtime(project)
        with rt.lock:
            try:
                rt.feed_state.unmark_regular(feed, classLabel, context)
            except NoSuchMarkingError as exc:
                raise HTTPException(404, detail=str(exc)) from None
            rt.persist_markings()
            rt.hub.publish(
                "marking_changed",
                {
                    "feedId": feed,
                    "classLabel": classLabel,
                    "context": context,
                    "marked": False,
                    "version": rt.feed_state.version,
                },
            )
            return {"removed": True, "version": rt.feed_state.version}

    @app.get("/api/projects/{project}/feeds/{feed}/frequencies")
    def get_frequencies(
        project: str,
        feed: str,
        window: float = Query(60.0),
        context: str = Query("any"),
    ) -> Any:
        rt = runtime(project)
        with rt.lock:
            try:
                return rt.feed_state.frequencies(feed, window, context)
            except UnknownFeedError as exc:
                raise HTTPException(404, detail=str(exc)) from None
            except ValueError as exc:
                raise HTTPException(400, detail=str(exc)) from None

    @app.get("/api/projects/{project}/detections")
    def get_detections(project: str, since: int = Query(0)) -> Any:
        rt = runtime(project)
        with rt.lock:
            rows = store.read_detections(project)
        return {"detections": rows[since:], "next": len(rows)}

    @app.get("/api/projects/{project}/detections/{detection_id:path}/explanation")
    def get_explanation(project: str, detection_id: str) -> Any:
        from ..engine import Detection

        rt = runtime(project)
        with rt.lock:
            rows = [
                row
                for row in store.read_detections(project)
                if row.get("id") == detection_id
            ]
            if not rows:
                raise HTTPException(404, detail=f"unknown detection {detection_id!r}")
            detection = Detection.from_json(rows[-1])
            try:
                explanation = explain(
                    detection,
                    rt.feed_state,
                    rt.definitions,
                    palette=rt.palette,
                    class_mapping=rt.feed_state.class_to_concept,
                )
            except FusedeskError as exc:
                raise HTTPException(422, detail=str(exc)) from None
            return explanation.to_json()

    @app.post("/api/projects/{project}/scenario/run")
    def post_run(project: str, body: dict[str, Any] = Body(...)) -> Any:
        rt = runtime(project)
        seed = body.get("seed")
        if "scenario" in body:
            raw = body["scenario"]
        elif "scenarioPath" in body:
            try:
                raw = json.loads(Path(body["scenarioPath"]).read_text(encoding="utf-8"))
            except OSError as exc:
                raise HTTPException(400, detail=f"cannot read scenario: {exc}") from None
            except json.JSONDecodeError as exc:
                raise HTTPException(400, detail=f"scenario parse error: {exc}") from None
        else:
            raise HTTPException(400, detail="body needs 'scenario' or 'scenarioPath'")
        with rt.lock:
            try:
                scenario = validate_scenario(raw, seed_override=seed)
                embedded = RunConfig.from_scenario_json(raw)
            except InvalidScenarioError as exc:
                raise HTTPException(400, detail={"violations": exc.violations}) from None
            definitions = dict(rt.definitions)
            for definition in embedded.definitions:
                definitions[definition.name] = definition
            if embedded.definitions:
                # scenario-embedded definitions become project knowledge so
                # their detections stay explainable after the run
                rt.definitions = definitions
                rt.persist_definitions()
            markings = rt.feed_state.markings_json() + embedded.markings
            mapping = {**rt.feed_state.class_to_concept, **embedded.class_mapping}
            config = RunConfig(
                definitions=list(definitions.values()),
                markings=markings,
                class_mapping=mapping,
                palette=embedded.palette or rt.palette,
            )
            try:
                result = run_scenario(
                    scenario,
                    config,
                    publish=rt.hub.publish,
                    on_event=lambda event: (
                        store.append_event(project, event.to_json()),
                        rt.feed_state.load_events([event]),
                    ),
                    on_detection=lambda detection: store.append_detection(
                        project, detection.to_json()
                    ),
                )
            except FusedeskError as exc:
                raise HTTPException(400, detail=str(exc)) from None
            rt.last_engine = result.engine
            return result.summary()

    @app.get("/api/projects/{project}/stream")
    def stream(project: str) -> StreamingResponse:
        rt = runtime(project)
        subscriber = rt.hub.subscribe()

        def event_source() -> Iterator[str]:
            try:
                yield ": connected\n\n"
                while True:
                    try:
                        message = subscriber.queue.get(timeout=HEARTBEAT_SECONDS)
                    except queue.Empty:
                        if subscriber.dropped:
                            yield "event: dropped\ndata: {}\n\n"
                            return
                        yield ": ping\n\n"
                        continue
                    yield (
                        f"id: {message['sequence']}\n"
                        f"data: {dumps_canonical(message)}\n\n"
                    )
            finally:
                rt.hub.unsubscribe(subscriber)

        return StreamingResponse(event_source(), media_type="text/event-stream")

    @app.exception_handler(StoreCorruptError)
    def corrupt_handler(_request: Request, exc: StoreCorruptError) -> JSONResponse:
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    return app
