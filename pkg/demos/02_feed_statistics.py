"""Watching a feed, spotting regular background classes, suppressing them.

A generic activity classifier pointed at a nightclub camera keeps firing
"shotput" and "hammer_throw". The operator marks those regular so the
pattern matcher ignores them, without losing the audit trail.
"""

from fusedesk import FeedState, RegularMarking, SimpleEvent


def classifier_output(event_id, label, t, context="night"):
    return SimpleEvent(
        id=event_id,
        feed_id="nightclub",
        modality="video",
        class_label=label,
        confidence=0.8,
        timestamp=t,
        location=(0.0, 0.0),
        partner="UK",
        context=context,
    )


state = FeedState()
script = ["shotput"] * 4 + ["hammer_throw"] * 3 + ["salsa_spin"] * 2 + ["punch"]
for index, label in enumerate(script):
    state.record(classifier_output(f"nc-{index:03d}", label, float(index * 5)))

print("class frequencies over the last 60 s:")
for row in state.frequencies("nightclub", 60.0):
    print(f"  {row['class']:<14} count={row['count']}  rate={row['rate']:.3f}/s")

# the operator marks the two noisy classes as regular for this feed
state.mark_regular(RegularMarking("nightclub", "shotput", "any", "op1", 100.0))
state.mark_regular(RegularMarking("nightclub", "hammer_throw", "any", "op1", 101.0))

probe = classifier_output("probe-1", "shotput", 60.0)
print("\nshotput suppressed now:", state.is_suppressed(probe))
print("salsa_spin suppressed:", state.is_suppressed(classifier_output("probe-2", "salsa_spin", 61.0)))

# context-scoped markings only apply when the context matches
state.mark_regular(RegularMarking("nightclub", "salsa_spin", "night", "op1", 102.0))
day_spin = classifier_output("probe-3", "salsa_spin", 62.0, context="day")
night_spin = classifier_output("probe-4", "salsa_spin", 63.0, context="night")
print("salsa_spin by day:", state.is_suppressed(day_spin))
print("salsa_spin by night:", state.is_suppressed(night_spin))

state.unmark_regular("nightclub", "shotput", "any")
print("\nafter unmark, shotput suppressed:", state.is_suppressed(probe))
print("marking-state version:", state.version)
