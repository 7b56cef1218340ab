"""Headless runs and the HTTP gateway, end to end.

Writes a scenario file, runs it through the CLI path twice to show the
detection log is byte-identical, then drives the same scenario through
the HTTP API and compares.
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from fusedesk.gateway.runner import run_headless
from fusedesk.gateway.service import create_app

SCENARIO = {
    "name": "checkpoint-ied",
    "seed": 5,
    "durationSeconds": 100,
    "feeds": [
        {
            "feedId": "checkpoint",
            "partner": "UK",
            "location": {"x": 0, "y": 0},
            "modality": "audio",
            "backgroundRate": 0,
            "backgroundClasses": [],
            "contextSchedule": [{"fromSecond": 0, "context": "day"}],
        }
    ],
    "injections": [
        {"feedId": "checkpoint", "classLabel": "explosion", "atSecond": 10, "confidence": 0.9, "offset": {"dx": 0, "dy": 0}},
        {"feedId": "checkpoint", "classLabel": "siren", "atSecond": 60, "confidence": 0.8, "offset": {"dx": 100, "dy": 0}},
    ],
    "definitions": [
        {
            "name": "ied",
            "constituents": [
                {"matcher": "explosion", "matcherKind": "class", "role": "initiator", "minCount": 1},
                {"matcher": "siren", "matcherKind": "class", "role": "terminator", "minCount": 1},
            ],
            "windowSeconds": 300,
            "radiusMeters": 500,
            "enabled": True,
        }
    ],
}

workdir = Path(tempfile.mkdtemp(prefix="fusedesk-demo-"))
scenario_path = workdir / "ied.scenario.json"
scenario_path.write_text(json.dumps(SCENARIO, indent=2))

out1 = workdir / "run1.detections.jsonl"
out2 = workdir / "run2.detections.jsonl"
print("headless run #1 exit:", run_headless(str(scenario_path), None, str(out1)))
print("headless run #2 exit:", run_headless(str(scenario_path), None, str(out2)))
assert out1.read_bytes() == out2.read_bytes()
print("same scenario + seed => byte-identical detection logs: ok\n")

print("detections:")
for line in out1.read_text().splitlines():
    print(" ", line)

# the same scenario through the HTTP gateway
with TestClient(create_app(workdir / "data")) as client:
    print("\nGET /api/health ->", client.get("/api/health").json())
    summary = client.post(
        "/api/projects/demo/scenario/run", json={"scenarioPath": str(scenario_path)}
    ).json()
    print("POST /scenario/run ->", summary)
    detections = client.get("/api/projects/demo/detections").json()["detections"]
    explanation = client.get(
        f"/api/projects/demo/detections/{detections[0]['id']}/explanation"
    ).json()
    print("explanation narrative:", explanation["narrative"])

api_log = (workdir / "data" / "projects" / "demo" / "project.detections.jsonl").read_bytes()
assert api_log == out1.read_bytes()
print("\nAPI-driven run matches the headless detection log: ok")
print("\nscratch dir:", workdir)
