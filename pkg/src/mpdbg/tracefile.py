"""Trace serialization: JSON Lines, one header line plus one record per line.

Line 1 is the run header (program, world_size, inputs, policy reference,
overhead model, created_at). Every further line is either an event object
with the canonical field names (event_no, process, kind, ts_enter, ts_exit,
msg:{sender,seq}, peer, tag, length, wildcard, payload_ref, source_loc) or
a snapshot record with kind "snapshot". Keys are sorted so files diff and
round-trip byte-exactly.
"""

from __future__ import annotations

import json
from typing import Any

from .arrays import ArrayInfo, ArraySnapshot
from .errors import FormatError
from .monitor import EVENT_KINDS, Event, QueueSnapshot, Trace, VarSnapshot
from .runtime import MessageId

_EVENT_OPTIONAL = ("msg", "peer", "tag", "length", "wildcard", "filter_tag",
                   "payload_ref", "source_loc")


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _encode_value(v):
    if isinstance(v, (bytes, bytearray)):
        return {"__bytes_hex__": bytes(v).hex()}
    return v


def _decode_value(v):
    if isinstance(v, dict) and set(v) == {"__bytes_hex__"}:
        return bytes.fromhex(v["__bytes_hex__"])
    return v


def event_to_obj(ev: Event) -> dict:
    obj: dict[str, Any] = {
        "event_no": ev.event_no,
        "process": ev.process,
        "kind": ev.kind,
        "ts_enter": ev.ts_enter,
        "ts_exit": ev.ts_exit,
    }
    if ev.msg is not None:
        obj["msg"] = {"sender": ev.msg.sender, "seq": ev.msg.seq}
    if ev.peer is not None:
        obj["peer"] = ev.peer
    if ev.tag is not None:
        obj["tag"] = ev.tag
    if ev.length is not None:
        obj["length"] = ev.length
    if ev.wildcard is not None:
        obj["wildcard"] = ev.wildcard
    if ev.filter_tag is not None:
        obj["filter_tag"] = ev.filter_tag
    if ev.payload_ref is not None:
        obj["payload_ref"] = ev.payload_ref
    if ev.source_loc is not None:
        obj["source_loc"] = [ev.source_loc[0], ev.source_loc[1]]
    return obj


def event_from_obj(obj: dict, line: int) -> Event:
    for req in ("event_no", "process", "kind", "ts_enter", "ts_exit"):
        if req not in obj:
            raise FormatError(line, f"event record missing field {req!r}")
    kind = obj["kind"]
    if kind not in EVENT_KINDS:
        raise FormatError(line, f"unknown event kind {kind!r}")
    msg = None
    if obj.get("msg") is not None:
        m = obj["msg"]
        if not isinstance(m, dict) or "sender" not in m or "seq" not in m:
            raise FormatError(line, "msg must be an object with sender and seq")
        msg = MessageId(int(m["sender"]), int(m["seq"]))
    loc = obj.get("source_loc")
    return Event(
        event_no=int(obj["event_no"]),
        process=int(obj["process"]),
        kind=kind,
        ts_enter=int(obj["ts_enter"]),
        ts_exit=int(obj["ts_exit"]),
        msg=msg,
        peer=obj.get("peer"),
        tag=obj.get("tag"),
        length=obj.get("length"),
        wildcard=obj.get("wildcard"),
        filter_tag=obj.get("filter_tag"),
        payload_ref=obj.get("payload_ref"),
        source_loc=(loc[0], int(loc[1])) if loc is not None else None,
    )


def snapshot_to_obj(sid: str, snap) -> dict:
    if isinstance(snap, VarSnapshot):
        return {
            "kind": "snapshot", "id": sid, "snapshot_kind": "var",
            "name": snap.name, "value": _encode_value(snap.value),
        }
    if isinstance(snap, QueueSnapshot):
        return {
            "kind": "snapshot", "id": sid, "snapshot_kind": "queue",
            "pending": [{"sender": m.sender, "seq": m.seq} for m in snap.pending],
        }
    if isinstance(snap, ArraySnapshot):
        obj = {
            "kind": "snapshot", "id": sid, "snapshot_kind": "array",
            "info": snap.info.to_json_obj(),
            "values": snap.local_values,
        }
        if snap.at_event is not None:
            obj["at_event"] = {"process": snap.at_event[0], "event_no": snap.at_event[1]}
        return obj
    raise TypeError(f"unknown snapshot type {type(snap).__name__}")


def snapshot_from_obj(obj: dict, line: int):
    skind = obj.get("snapshot_kind")
    if skind == "var":
        return VarSnapshot(obj["name"], _decode_value(obj["value"]))
    if skind == "queue":
        return QueueSnapshot(
            [MessageId(int(m["sender"]), int(m["seq"])) for m in obj["pending"]]
        )
    if skind == "array":
        at = obj.get("at_event")
        return ArraySnapshot(
            info=ArrayInfo.from_json_obj(obj["info"]),
            local_values=list(obj["values"]),
            at_event=(int(at["process"]), int(at["event_no"])) if at else None,
        )
    raise FormatError(line, f"unknown snapshot_kind {skind!r}")


def dumps(trace: Trace) -> str:
    lines = [canonical_json(trace.meta)]
    for rank in sorted(trace.events):
        for ev in trace.events[rank]:
            lines.append(canonical_json(event_to_obj(ev)))
    for sid in sorted(trace.snapshots, key=lambda s: (len(s), s)):
        lines.append(canonical_json(snapshot_to_obj(sid, trace.snapshots[sid])))
    return "\n".join(lines) + "\n"


def loads(text: str) -> Trace:
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise FormatError(1, "missing header line")
    try:
        meta = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatError(1, f"header is not valid JSON: {exc.msg}") from exc
    if not isinstance(meta, dict) or "program" not in meta or "world_size" not in meta:
        raise FormatError(1, "header must be an object with program and world_size")
    world_size = int(meta["world_size"])
    events: dict[int, list[Event]] = {r: [] for r in range(world_size)}
    snapshots: dict[str, Any] = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise FormatError(lineno, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(obj, dict) or "kind" not in obj:
            raise FormatError(lineno, "record must be an object with a kind")
        if obj["kind"] == "snapshot":
            if "id" not in obj:
                raise FormatError(lineno, "snapshot record missing id")
            snapshots[obj["id"]] = snapshot_from_obj(obj, lineno)
        else:
            ev = event_from_obj(obj, lineno)
            events.setdefault(ev.process, []).append(ev)
    for rank, lst in events.items():
        lst.sort(key=lambda e: e.event_no)
        for k, ev in enumerate(lst):
            if ev.event_no != k:
                raise FormatError(
                    0, f"process {rank} event numbering has a gap at {k}"
                )
    return Trace(meta=meta, events=events, snapshots=snapshots)


def write_trace(trace: Trace, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(trace))


def read_trace(path: str) -> Trace:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())
