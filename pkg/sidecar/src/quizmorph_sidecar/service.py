"""Newline-JSON inference service speaking the embed/score wire protocol."""

import argparse
import json
import socketserver
import sys
from dataclasses import dataclass

from .encoders import ModelLoadError, build_encoder
from .wellformed import build_classifier

MAX_BATCH = 64
_SUPPORTED_DEVICES = ("cpu",)


@dataclass(frozen=True)
class ModelBundle:
    """Identifiers for the models the service must load before going ready."""

    encoder_id: str = "hashed-ngram-64"
    classifier_id: str = "wellformed-logistic-v1"
    device: str = "cpu"

    def load(self):
        if self.device not in _SUPPORTED_DEVICES:
            raise ModelLoadError(f"device not available: {self.device}")
        return build_encoder(self.encoder_id), build_classifier(self.classifier_id)


def handle_request(line, encoder, classifier):
    """Answer one wire request; wire-level noise yields None instead of a reply."""
    line = line.strip()
    if not line:
        return None
    try:
        message = json.loads(line)
    except json.JSONDecodeError:
        return None
    if not isinstance(message, dict) or "req_id" not in message:
        return None
    req_id = message["req_id"]
    op = message.get("op")
    texts = message.get("texts")
    if op not in ("embed", "score"):
        return {"req_id": req_id, "error": f"unknown op: {op!r}"}
    if not isinstance(texts, list) or any(
        not isinstance(text, str) for text in texts
    ):
        return {"req_id": req_id, "error": "texts must be a list of strings"}
    if len(texts) > MAX_BATCH:
        return {
            "req_id": req_id,
            "error": f"batch of {len(texts)} texts exceeds cap {MAX_BATCH}",
        }
    try:
        if op == "embed":
            return {"req_id": req_id, "vectors": encoder.encode(texts)}
        scores = [min(1.0, max(0.0, score)) for score in classifier.score(texts)]
        return {"req_id": req_id, "scores": scores}
    except Exception as exc:
        return {"req_id": req_id, "error": f"{op} failed: {exc}"}


def ready_line(encoder, **extra):
    payload = {"ready": True, "embed_dim": encoder.dim}
    payload.update(extra)
    return json.dumps(payload)


def serve_stdio(encoder, classifier):
    """Process requests from stdin until EOF, one JSON object per line."""
    print(ready_line(encoder), flush=True)
    for line in sys.stdin:
        response = handle_request(line, encoder, classifier)
        if response is not None:
            print(json.dumps(response), flush=True)
    return 0


class _ConnectionHandler(socketserver.StreamRequestHandler):
    def handle(self):
        encoder = self.server.encoder
        classifier = self.server.classifier
        self.wfile.write((ready_line(encoder) + "\n").encode("utf-8"))
        self.wfile.flush()
        for raw in self.rfile:
            response = handle_request(raw.decode("utf-8"), encoder, classifier)
            if response is not None:
                self.wfile.write((json.dumps(response) + "\n").encode("utf-8"))
                self.wfile.flush()


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


def serve_tcp(encoder, classifier, port):
    """Listen on 127.0.0.1; port 0 picks a free port, reported on stdout."""
    server = _Server(("127.0.0.1", port), _ConnectionHandler)
    server.encoder = encoder
    server.classifier = classifier
    bound_port = server.server_address[1]
    print(ready_line(encoder, port=bound_port), flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="quizmorph-sidecar",
        description="Serve sentence embeddings and well-formedness scores "
        "over newline-delimited JSON.",
    )
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument(
        "--stdio", action="store_true",
        help="serve on standard streams (default)",
    )
    mode.add_argument(
        "--port", type=int, default=None,
        help="serve on a local TCP port; 0 picks a free port",
    )
    parser.add_argument(
        "--encoder", default="hashed-ngram-64", help="sentence encoder identifier"
    )
    parser.add_argument(
        "--classifier", default="wellformed-logistic-v1",
        help="well-formedness model identifier or checkpoint path",
    )
    parser.add_argument(
        "--device", default="cpu", help="compute device for the models"
    )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    bundle = ModelBundle(args.encoder, args.classifier, args.device)
    try:
        encoder, classifier = bundle.load()
    except ModelLoadError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return 1
    if args.port is not None:
        return serve_tcp(encoder, classifier, args.port)
    return serve_stdio(encoder, classifier)


if __name__ == "__main__":
    sys.exit(main())
