import json

import pytest
from fastapi.testclient import TestClient

from persuader.service import create_app
from persuader.session import read_transcript

GREETING = (
    "Hello, my name is InfoRob, I am here to give you suggestions concerning "
    "health and prevention issues on the topic of COVID-19"
)


@pytest.fixture()
def client(pack, tmp_path):
    app = create_app(pack, transcripts_dir=tmp_path / "transcripts")
    with TestClient(app) as tc:
        yield tc


def start(ws, seed=42, profile="open_minded", pack_id="covid19-en"):
    ws.send_text(json.dumps({"type": "start", "pack": pack_id, "seed": seed, "profile": profile}))


def recv_burst(ws):
    """Read messages until a question utterance, an end, or an error."""
    messages = []
    while True:
        message = json.loads(ws.receive_text())
        messages.append(message)
        if message["type"] == "error" or message["type"] == "end":
            return messages
        if message["type"] == "utterance" and message["options"]:
            return messages


def choose(ws, session, option):
    ws.send_text(json.dumps({"type": "choice", "session": session, "option": option}))


def pick(message, suffix):
    return next(o["id"] for o in message["options"] if o["id"].endswith(suffix))


def test_start_returns_greeting_burst(client):
    with client.websocket_connect("/session") as ws:
        start(ws)
        burst = recv_burst(ws)
        assert burst[0]["type"] == "utterance"
        assert burst[0]["seq"] == 0
        assert burst[0]["function"] == "greeting_self_introduction"
        assert burst[0]["text"] == GREETING
        assert burst[0]["options"] == []
        assert burst[-1]["function"] == "question"
        assert burst[-1]["options"]


def test_unknown_pack_is_an_error_without_a_session(client):
    with client.websocket_connect("/session") as ws:
        start(ws, pack_id="nope")
        message = json.loads(ws.receive_text())
        assert message["type"] == "error"
        assert message["code"] == "unknown_pack"


def test_bad_json_and_bad_schema_are_recoverable(client):
    with client.websocket_connect("/session") as ws:
        ws.send_text("{not json")
        assert json.loads(ws.receive_text())["code"] == "bad_message"
        ws.send_text(json.dumps({"type": "choice"}))  # missing fields
        assert json.loads(ws.receive_text())["code"] == "bad_message"
        start(ws)  # the connection still works
        assert recv_burst(ws)[0]["type"] == "utterance"


def test_seq_numbers_are_contiguous_across_bursts(client):
    with client.websocket_connect("/session") as ws:
        start(ws, seed=7)
        burst = recv_burst(ws)
        session = burst[0]["session"]
        seqs = [m["seq"] for m in burst if m["type"] == "utterance"]
        while True:
            choose(ws, session, pick(burst[-1], "-high"))
            burst = recv_burst(ws)
            seqs.extend(m["seq"] for m in burst if m["type"] == "utterance")
            if burst[-1]["type"] == "end":
                break
        assert seqs == list(range(len(seqs)))


def test_full_session_over_the_wire_ends_with_summary(client):
    with client.websocket_connect("/session") as ws:
        start(ws, seed=4, profile="open_minded")
        burst = recv_burst(ws)
        session = burst[0]["session"]
        functions = [m["function"] for m in burst if m["type"] == "utterance"]
        while burst[-1]["type"] != "end":
            choose(ws, session, pick(burst[-1], "-low"))
            burst = recv_burst(ws)
            functions.extend(m["function"] for m in burst if m["type"] == "utterance")
        end = burst[-1]
        assert end["summary"]["per_topic"]["mask"] == {"knowledge": "low", "intention": "low"}
        assert functions[0] == "greeting_self_introduction"
        assert functions[-1] == "goodbye"
        assert "substitution" in functions  # open-minded skeptic path


def test_argument_messages_carry_a_technique_badge(client):
    with client.websocket_connect("/session") as ws:
        start(ws, seed=4)
        burst = recv_burst(ws)
        session = burst[0]["session"]
        seen = []
        while burst[-1]["type"] != "end":
            choose(ws, session, pick(burst[-1], "-low"))
            burst = recv_burst(ws)
            seen.extend(m for m in burst if m["type"] == "utterance")
        arguments = [m for m in seen if m["function"] == "argument"]
        assert arguments and all(m["technique"] for m in arguments)
        non_arguments = [m for m in seen if m["function"] != "argument"]
        assert all(m.get("technique") is None for m in non_arguments)


def test_stale_choice_is_rejected_and_session_continues(client):
    with client.websocket_connect("/session") as ws:
        start(ws, seed=3, profile="neutral")
        burst = recv_burst(ws)
        session = burst[0]["session"]
        option = pick(burst[-1], "-low")
        choose(ws, session, option)
        burst = recv_burst(ws)
        choose(ws, session, option)  # replay the consumed option
        message = json.loads(ws.receive_text())
        assert message["type"] == "error"
        assert message["code"] == "stale_option"
        choose(ws, session, pick(burst[-1], "-low"))  # the proper pending option
        assert recv_burst(ws)[0]["type"] == "utterance"


def test_unknown_session_is_an_error(client):
    with client.websocket_connect("/session") as ws:
        choose(ws, "deadbeef", "x")
        assert json.loads(ws.receive_text())["code"] == "unknown_session"


def test_sessions_are_isolated(client):
    with client.websocket_connect("/session") as a, client.websocket_connect("/session") as b:
        start(a, seed=1, profile="neutral")
        start(b, seed=2, profile="neutral")
        burst_a = recv_burst(a)
        burst_b = recv_burst(b)
        session_a = burst_a[0]["session"]
        session_b = burst_b[0]["session"]
        assert session_a != session_b
        choose(a, session_a, pick(burst_a[-1], "-low"))
        burst_a2 = recv_burst(a)
        # b answers the same question id; its state is untouched by a's reply
        choose(b, session_b, pick(burst_b[-1], "-high"))
        burst_b2 = recv_burst(b)
        assert burst_a2[0]["function"] == "inform"
        assert burst_b2[0]["function"] == "acknowledge"


def test_interleaved_sessions_match_serial_runs_digest_for_digest(pack, tmp_path):
    """Stress the registry with round-robin traffic; every persisted
    transcript must be byte-identical to an in-process serial run."""
    from persuader.session import SessionRuntime, transcript_to_text

    transcripts = tmp_path / "transcripts"
    app = create_app(pack, transcripts_dir=transcripts)
    plans = [
        (101, "open_minded", "-low"),
        (102, "neutral", "-high"),
        (103, "random", "-low"),
        (104, "random", "-medium"),
        (105, "neutral", "-low"),
        (106, "open_minded", "-high"),
    ]
    with TestClient(app) as tc:
        sockets = [tc.websocket_connect("/session").__enter__() for _ in plans]
        try:
            states = []
            for ws, (seed, profile, _) in zip(sockets, plans):
                start(ws, seed=seed, profile=profile)
                states.append(recv_burst(ws))
            done = [False] * len(plans)
            while not all(done):
                for i, (ws, (seed, profile, suffix)) in enumerate(zip(sockets, plans)):
                    if done[i]:
                        continue
                    burst = states[i]
                    if burst[-1]["type"] == "end":
                        done[i] = True
                        continue
                    choose(ws, burst[0]["session"], pick(burst[-1], suffix))
                    states[i] = recv_burst(ws)
        finally:
            for ws in sockets:
                ws.__exit__(None, None, None)

    files = {f.name for f in transcripts.glob("*.jsonl")}
    assert len(files) == len(plans)
    recorded = sorted(
        (json.loads(f.read_text().splitlines()[0])["seed"], f.read_text())
        for f in transcripts.glob("*.jsonl")
    )
    for (seed, content), (plan_seed, profile, suffix) in zip(recorded, plans):
        assert seed == plan_seed
        serial = SessionRuntime(pack, seed=plan_seed, profile=profile)
        serial.start()
        while not serial.is_complete:
            option = next(o for o in serial.pending_act.options if o.endswith(suffix))
            serial.submit(option)
        assert content == transcript_to_text(serial.transcript())


def test_transcripts_persisted_per_session(pack, tmp_path):
    transcripts = tmp_path / "transcripts"
    app = create_app(pack, transcripts_dir=transcripts)
    with TestClient(app) as tc:
        with tc.websocket_connect("/session") as ws:
            start(ws, seed=11, profile="neutral")
            burst = recv_burst(ws)
            session = burst[0]["session"]
            choose(ws, session, pick(burst[-1], "-high"))
            recv_burst(ws)
    files = list(transcripts.glob("*.jsonl"))
    assert len(files) == 1
    lines = read_transcript(files[0])
    assert lines[0]["kind"] == "header" and lines[0]["seed"] == 11
    assert [e["seq"] for e in lines[1:]] == list(range(len(lines) - 1))


def test_index_page_mentions_the_service(client):
    response = client.get("/")
    assert response.status_code == 200
    assert "session" in response.text.lower()


def test_wire_messages_match_the_schema_exactly(client):
    with client.websocket_connect("/session") as ws:
        start(ws, seed=5)
        for message in recv_burst(ws):
            assert set(message) == {
                "type", "session", "seq", "function", "scene", "technique", "text", "options"
            }
            for option in message["options"]:
                assert set(option) == {"id", "label"}
