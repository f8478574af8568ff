"""Protocol conformance checks shared by the mock-driven and live service tests.

Each check takes a zero-argument factory returning a connected client and
closes whatever it opens.
"""

import threading


def check_single_text(make_client):
    with make_client() as client:
        vectors = client.embed(["one short question"])
    assert len(vectors) == 1
    assert len(vectors[0]) > 0


def check_batch_contract(make_client):
    texts = [f"question number {i}" for i in range(64)]
    with make_client() as client:
        vectors = client.embed(texts)
        assert len(vectors) == 64
        dims = {len(vector) for vector in vectors}
        assert len(dims) == 1
        assert client.embed_dim in dims


def check_embed_determinism(make_client):
    texts = ["the same text", "the same text", "another text"]
    with make_client() as client:
        first = client.embed(texts)
        second = client.embed(texts)
    assert first == second
    assert first[0] == first[1]


def check_score_range(make_client, texts):
    with make_client() as client:
        scores = client.score(texts)
    assert len(scores) == len(texts)
    assert all(0.0 <= score <= 1.0 for score in scores)


def check_concurrent_correlation(make_client, make_reference=None):
    """Pipelined requests from several threads come back correctly matched.

    Expected vectors come from a separate sequential client so the check also
    works against services that deliberately reorder in-flight responses.
    """
    batches = [[f"thread {t} text {i}" for i in range(3 + t)] for t in range(4)]
    make_reference = make_reference or make_client
    with make_reference() as reference:
        expected = [reference.embed(batch) for batch in batches]
    results = [None] * len(batches)
    errors = []
    barrier = threading.Barrier(len(batches))

    def worker(client, position):
        try:
            barrier.wait()
            results[position] = client.embed(batches[position])
        except Exception as exc:
            errors.append(exc)

    with make_client() as client:
        threads = [
            threading.Thread(target=worker, args=(client, i))
            for i in range(len(batches))
        ]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
    assert not errors
    assert results == expected
