#!/usr/bin/env python3
"""Capture a protocol fixture for the viewer tests from a live server.

Talks only the public WebSocket protocol. Start a server first, e.g.

    face4d gen-model --seed 40 --vertices 200 --kid 6 --kexp 3 --landmarks 16 \
        --model-id global --out /tmp/fx/global.m4dm
    face4d gen-sequence --model /tmp/fx/global.m4dm --seed 41 --frames 30 \
        --out /tmp/fx/seq.lmk.jsonl
    face4d serve --model-dir /tmp/fx --sequence /tmp/fx/seq.lmk.jsonl --port 7489

then:  python3 scripts/capture_fixture.py --port 7489 --out tests/fixtures/session.json

Expected vertex arrays are computed here from the wire data with the
server-side reconstruction rule (mean + bases @ coefficients, float64), so the
TypeScript implementation is checked against an independent arithmetic path.
"""

import argparse
import json

from websockets.sync.client import connect


def reconstruct(info, p, q):
    n3 = 3 * info["n_vertices"]
    out = list(info["mean_shape"])
    for k, weight in enumerate(p):
        base = n3 * k
        for i in range(n3):
            out[i] += weight * info["id_basis"][base + i]
    for k, weight in enumerate(q):
        base = n3 * k
        for i in range(n3):
            out[i] += weight * info["exp_basis"][base + i]
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--port", type=int, default=7464)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--frames", type=int, default=4)
    parser.add_argument("--out", default="tests/fixtures/session.json")
    args = parser.parse_args()

    conn = connect(f"ws://{args.host}:{args.port}/", open_timeout=10)
    recv = lambda: json.loads(conn.recv(timeout=10))
    hello = recv()
    info = recv()
    assert hello["type"] == "hello" and info["type"] == "model_info"

    conn.send(json.dumps({"type": "set_options", "show_landmarks": True, "show_bbox": True}))
    assert recv()["type"] == "options_ack"
    conn.send(json.dumps({"type": "play"}))
    assert recv()["type"] == "options_ack"

    frames = []
    while len(frames) < args.frames:
        message = recv()
        if message["type"] == "frame":
            message["expected_vertices"] = reconstruct(info, message["p"], message["q"])
            frames.append(message)
        if len(frames) == args.frames // 2:
            # capture a doubled-exaggeration frame pair for the slider test
            conn.send(json.dumps({"type": "set_options", "exaggeration": 2.0}))
    conn.send(json.dumps({"type": "pause"}))
    conn.close()

    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump({"model_info": info, "frames": frames}, fh)
    print(f"wrote {args.out}: model N={info['n_vertices']}, {len(frames)} frames")


if __name__ == "__main__":
    main()
