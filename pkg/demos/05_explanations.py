"""Drilling into why a detection fired, and why an event was ignored.

Every number in an explanation is recomputed from the event log and the
definition, so the story can never drift from the data.
"""

from fusedesk import (
    ComplexEventDefinition,
    ConstituentSpec,
    Engine,
    FeedState,
    RegularMarking,
    SimpleEvent,
    explain,
    explain_suppression,
    verify_explanation,
)

ied = ComplexEventDefinition(
    name="ied",
    constituents=(
        ConstituentSpec("explosion", "initiator"),
        ConstituentSpec("siren", "terminator"),
    ),
    window_seconds=300.0,
    radius_meters=500.0,
)


def heard(event_id, label, conf, t, loc=(0.0, 0.0)):
    return SimpleEvent(
        id=event_id,
        feed_id="checkpoint",
        modality="audio",
        class_label=label,
        confidence=conf,
        timestamp=t,
        location=loc,
        partner="UK",
        context="day",
    )


state = FeedState()
state.mark_regular(RegularMarking("checkpoint", "shouting", "any", "op1", 0.0))
engine = Engine([ied], feed_state=state)
detections = engine.ingest_all(
    [
        heard("cp-1", "shouting", 0.6, 5.0),  # regular background, suppressed
        heard("cp-2", "explosion", 0.9, 10.0),
        heard("cp-3", "siren", 0.8, 60.0, (100.0, 0.0)),
    ]
)

detection = detections[0]
explanation = explain(detection, engine.feed_state, [ied])

print("narrative:")
print(" ", explanation.narrative)

print("\nconstituents:")
for line in explanation.constituents:
    print(
        f"  {line.role:<11} {line.class_label:<10} p={line.confidence}"
        f"  feed={line.feed_id} partner={line.partner}"
    )

print("\nconstraint checks:")
for check in explanation.constraint_checks:
    print(
        f"  {check.kind:<9} actual={check.actual:g} bound={check.bound:g}"
        f" satisfied={check.satisfied}"
    )

print("\nprobability terms:")
for event_id, confidence in explanation.probability_terms:
    print(f"  {event_id}: {confidence}")
print("  product =", explanation.product)

assert verify_explanation(explanation, detection, engine.feed_state, [ied])
print("\nindependent recomputation agrees: ok")

trace = explain_suppression("cp-1", engine)
print(
    "\ncp-1 was suppressed at t="
    f"{trace.decided_at:g} by marking ({trace.marking.feed_id}, "
    f"{trace.marking.class_label}, {trace.marking.context})"
)
print("cp-2 suppressed:", explain_suppression("cp-2", engine))
