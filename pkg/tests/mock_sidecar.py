"""Scripted sidecar that replays deterministic or deliberately awkward responses.

Usage: python mock_sidecar.py MODE [STATE_FILE]

Modes:
  echo        answer every request in order with deterministic results
  swap        buffer two requests, answer them in reverse order
  stale       prepend a response with an unknown req_id before each real one
  error       reply with an error message to every request
  mute        never reply (forces client timeouts)
  flaky       mute on the first process run, echo on later runs (STATE_FILE)
  badcount    return one result fewer than requested
  baddim      return vectors of inconsistent dimensions
  shrink      full dimension on the first request, one less afterwards
"""

import hashlib
import json
import os
import sys

EMBED_DIM = 4


def vector_for(text):
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return [1.0 + digest[i] / 255.0 for i in range(EMBED_DIM)]


def score_for(text):
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return (digest[0] * 256 + digest[1]) % 1001 / 1000.0


def respond(request):
    texts = request["texts"]
    if request["op"] == "embed":
        return {"req_id": request["req_id"], "vectors": [vector_for(t) for t in texts]}
    return {"req_id": request["req_id"], "scores": [score_for(t) for t in texts]}


def emit(message):
    sys.stdout.write(json.dumps(message) + "\n")
    sys.stdout.flush()


def main():
    mode = sys.argv[1] if len(sys.argv) > 1 else "echo"
    if mode == "flaky":
        state = sys.argv[2]
        if not os.path.exists(state):
            with open(state, "w", encoding="utf-8") as handle:
                handle.write("started\n")
            mode = "mute"
        else:
            mode = "echo"
    emit({"ready": True, "embed_dim": EMBED_DIM})
    buffered = []
    answered = 0
    for raw in sys.stdin:
        line = raw.strip()
        if not line:
            continue
        request = json.loads(line)
        if mode == "mute":
            continue
        if mode == "shrink":
            width = EMBED_DIM if answered == 0 else EMBED_DIM - 1
            answered += 1
            vectors = [vector_for(t)[:width] for t in request["texts"]]
            emit({"req_id": request["req_id"], "vectors": vectors})
            continue
        if mode == "error":
            emit({"req_id": request["req_id"], "error": "scripted failure"})
            continue
        if mode == "badcount":
            reply = respond(request)
            key = "vectors" if "vectors" in reply else "scores"
            reply[key] = reply[key][:-1]
            emit(reply)
            continue
        if mode == "baddim":
            vectors = [vector_for(t) for t in request["texts"]]
            if len(vectors) > 1:
                vectors[-1] = vectors[-1][:-1]
            emit({"req_id": request["req_id"], "vectors": vectors})
            continue
        if mode == "stale":
            emit({"req_id": 999999, "vectors": [[9.0] * EMBED_DIM]})
            emit(respond(request))
            continue
        if mode == "swap":
            buffered.append(request)
            if len(buffered) == 2:
                emit(respond(buffered[1]))
                emit(respond(buffered[0]))
                buffered.clear()
            continue
        emit(respond(request))


if __name__ == "__main__":
    main()
