"""Message archive ingestion.

Archives (mbox, JSONL, CSV) are turned into a list of :class:`Message`
records and then into an immutable, reply-linked :class:`Corpus`.
Records that cannot be parsed or normalized are dropped and counted in an
:class:`IngestLog`; that count becomes the corpus' ``n_missing``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import re
from dataclasses import dataclass, field
from datetime import timezone
from email.utils import parseaddr, parsedate_to_datetime
from typing import IO, Iterable, Optional, Sequence, Union

logger = logging.getLogger(__name__)

ByteSource = Union[bytes, IO[bytes]]

_ID_RE = re.compile(r"<([^<>]+)>")
_HEADER_RE = re.compile(rb"^([\x21-\x39\x3b-\x7e]+):[ \t]?(.*)$")


class IngestError(ValueError):
    pass


class EmptyCorpusError(IngestError):
    pass


@dataclass
class IngestLog:
    """Running tally of records seen and dropped while ingesting."""

    seen: int = 0
    dropped: int = 0
    diagnostics: list = field(default_factory=list)

    def drop(self, where: str, reason: str) -> None:
        self.dropped += 1
        self.diagnostics.append(f"{where}: {reason}")
        logger.debug("dropped record at %s: %s", where, reason)


@dataclass(frozen=True)
class RawRecord:
    source_offset: int
    headers: tuple
    body_present: bool

    def get(self, name: str, default: Optional[str] = None) -> Optional[str]:
        name = name.lower()
        for key, value in self.headers:
            if key.lower() == name:
                return value
        return default


@dataclass(frozen=True)
class Message:
    id: str
    author: str
    timestamp: int
    reply_to: Optional[str] = None
    ordinal: int = -1

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "author": self.author,
            "timestamp": self.timestamp,
            "reply_to": self.reply_to,
        }


@dataclass(frozen=True)
class Corpus:
    messages: tuple
    n_participants: int
    n_threads: int
    n_missing: int
    date_first: int
    date_last: int

    @property
    def n_messages(self) -> int:
        return len(self.messages)

    def __len__(self) -> int:
        return len(self.messages)

    def summary(self) -> dict:
        return {
            "N": self.n_participants,
            "Gamma": self.n_threads,
            "M_missing": self.n_missing,
            "date_first": self.date_first,
            "date_last": self.date_last,
            "M": self.n_messages,
        }


def _read_bytes(stream: ByteSource) -> bytes:
    if isinstance(stream, (bytes, bytearray)):
        return bytes(stream)
    return stream.read()


def _parse_header_block(lines: Sequence[bytes]) -> Optional[list]:
    """Unfold and split a header block; None if the first line is not a header."""
    headers: list = []
    for line in lines:
        if line[:1] in (b" ", b"\t"):
            if not headers:
                return None
            name, value = headers[-1]
            cont = line.strip()
            headers[-1] = (name, f"{value} {cont.decode('utf-8', 'replace')}".strip())
            continue
        m = _HEADER_RE.match(line)
        if m is None:
            if not headers:
                return None
            # stray non-header line inside the block; ignore it
            continue
        headers.append(
            (m.group(1).decode("ascii"), m.group(2).strip().decode("utf-8", "replace"))
        )
    return headers or None


def _dedupe_headers(headers: list) -> tuple:
    seen = set()
    out = []
    for name, value in headers:
        key = name.lower()
        if key in seen:
            continue
        seen.add(key)
        out.append((name, value))
    return tuple(out)


def parse_mbox(stream: ByteSource, log: Optional[IngestLog] = None) -> list:
    """Split an mbox byte stream into :class:`RawRecord` objects.

    Records start at lines beginning with ``From `` (at the start of the
    stream or after a newline). Header continuation lines are joined to the
    previous header with a single space. A record whose first line after the
    separator is not a header is dropped and counted in ``log``.
    """
    if log is None:
        log = IngestLog()
    data = _read_bytes(stream)
    records: list = []
    if not data:
        return records

    starts = []
    offset = 0
    for line in data.splitlines(keepends=True):
        if line.startswith(b"From "):
            starts.append(offset)
        offset += len(line)
    if not starts or starts[0] != 0:
        # leading garbage before the first separator
        if data[: starts[0] if starts else len(data)].strip():
            log.seen += 1
            log.drop("offset 0", "content before first 'From ' line")

    bounds = list(zip(starts, starts[1:] + [len(data)]))
    for begin, end in bounds:
        log.seen += 1
        chunk = data[begin:end]
        lines = chunk.splitlines()[1:]
        block = []
        body_present = False
        for i, line in enumerate(lines):
            if not line.strip():
                body_present = any(rest.strip() for rest in lines[i + 1 :])
                break
            block.append(line)
        headers = _parse_header_block(block) if block else None
        if headers is None:
            log.drop(f"offset {begin}", "no headers before blank line")
            continue
        records.append(RawRecord(begin, _dedupe_headers(headers), body_present))
    return records


def _first_id(value: Optional[str]) -> Optional[str]:
    if not value:
        return None
    ids = _ID_RE.findall(value)
    if ids:
        return ids[0].strip()
    tokens = value.split()
    return tokens[0] if tokens else None


def _last_id(value: Optional[str]) -> Optional[str]:
    if not value:
        return None
    ids = _ID_RE.findall(value)
    if ids:
        return ids[-1].strip()
    tokens = value.split()
    return tokens[-1] if tokens else None


def _parse_date(value: str) -> int:
    dt = parsedate_to_datetime(value)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def normalize(records: Iterable[RawRecord], log: Optional[IngestLog] = None) -> list:
    """Map raw header records to :class:`Message` objects.

    Author is the lowercased address part of ``From``; the id is the
    ``Message-ID`` without angle brackets; the reply target is the first id in
    ``In-Reply-To``, falling back to the last id in ``References``.
    Records with a missing id, author or unparsable date are dropped.
    """
    if log is None:
        log = IngestLog()
    out = []
    for rec in records:
        where = f"offset {rec.source_offset}"
        msg_id = _first_id(rec.get("Message-ID"))
        if not msg_id:
            log.drop(where, "missing Message-ID")
            continue
        author = parseaddr(rec.get("From") or "")[1].strip().lower()
        if not author:
            log.drop(where, "missing From address")
            continue
        date = rec.get("Date")
        try:
            if not date:
                raise ValueError("missing Date")
            ts = _parse_date(date)
        except (TypeError, ValueError, IndexError, OverflowError) as exc:
            log.drop(where, f"bad Date: {exc}")
            continue
        reply_to = _first_id(rec.get("In-Reply-To")) or _last_id(rec.get("References"))
        if reply_to == msg_id:
            reply_to = None
        out.append(Message(msg_id, author, ts, reply_to))
    return out


def _message_from_fields(obj) -> Message:
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    msg_id = obj.get("id")
    author = obj.get("author")
    ts = obj.get("timestamp")
    reply_to = obj.get("reply_to")
    if not isinstance(msg_id, str) or not msg_id:
        raise ValueError("id must be a non-empty string")
    if not isinstance(author, str) or not author:
        raise ValueError("author must be a non-empty string")
    if not isinstance(ts, int) or isinstance(ts, bool):
        raise ValueError("timestamp must be an integer")
    if reply_to is not None and not isinstance(reply_to, str):
        raise ValueError("reply_to must be a string or null")
    if reply_to == "" or reply_to == msg_id:
        reply_to = None
    return Message(msg_id, author, ts, reply_to)


def parse_jsonl(stream: ByteSource, log: Optional[IngestLog] = None) -> list:
    """Read one message object per line; invalid lines are counted and skipped."""
    if log is None:
        log = IngestLog()
    text = _read_bytes(stream).decode("utf-8")
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        log.seen += 1
        try:
            out.append(_message_from_fields(json.loads(line)))
        except (json.JSONDecodeError, ValueError) as exc:
            log.drop(f"line {lineno}", str(exc))
    return out


def parse_csv(stream: ByteSource, log: Optional[IngestLog] = None) -> list:
    """Read a CSV with header ``id,author,timestamp,reply_to``.

    An empty ``reply_to`` cell means no reply target.
    """
    if log is None:
        log = IngestLog()
    text = _read_bytes(stream).decode("utf-8")
    reader = csv.DictReader(io.StringIO(text))
    missing = {"id", "author", "timestamp", "reply_to"} - set(reader.fieldnames or ())
    if missing:
        raise IngestError(f"CSV header lacks columns: {sorted(missing)}")
    out = []
    for row in reader:
        log.seen += 1
        try:
            ts_text = (row["timestamp"] or "").strip()
            if not re.fullmatch(r"-?\d+", ts_text):
                raise ValueError("timestamp must be an integer")
            fields = {
                "id": row["id"],
                "author": row["author"],
                "timestamp": int(ts_text),
                "reply_to": row["reply_to"] or None,
            }
            out.append(_message_from_fields(fields))
        except ValueError as exc:
            log.drop(f"line {reader.line_num}", str(exc))
    return out


def read_messages(path, fmt: str, log: Optional[IngestLog] = None) -> list:
    """Parse a file in one of the supported formats (mbox, jsonl, csv)."""
    if log is None:
        log = IngestLog()
    with open(path, "rb") as fh:
        data = fh.read()
    if fmt == "mbox":
        return normalize(parse_mbox(data, log), log)
    if fmt == "jsonl":
        return parse_jsonl(data, log)
    if fmt == "csv":
        return parse_csv(data, log)
    raise IngestError(f"unknown input format {fmt!r}")


def build_corpus(
    messages: Iterable[Message], limit: Optional[int] = None, n_missing: int = 0
) -> Corpus:
    """Sort, truncate and index messages; compute corpus summaries.

    Messages are ordered by ``(timestamp, id)`` and ordinals assigned
    0..M-1. Duplicate ids keep their first occurrence in that order and the
    rest count as missing. A reply whose target is not in the kept set makes
    its message a thread root.
    """
    ordered = sorted(messages, key=lambda m: (m.timestamp, m.id))
    kept = []
    seen_ids = set()
    for m in ordered:
        if m.id in seen_ids:
            n_missing += 1
            continue
        seen_ids.add(m.id)
        kept.append(m)
    if limit is not None:
        if limit < 1:
            raise IngestError(f"limit must be >= 1, got {limit}")
        kept = kept[:limit]
    if not kept:
        raise EmptyCorpusError("no messages left to build a corpus from")

    final = tuple(
        Message(m.id, m.author, m.timestamp, m.reply_to, i) for i, m in enumerate(kept)
    )
    ids = {m.id for m in final}
    n_threads = sum(1 for m in final if m.reply_to is None or m.reply_to not in ids)
    return Corpus(
        messages=final,
        n_participants=len({m.author for m in final}),
        n_threads=n_threads,
        n_missing=n_missing,
        date_first=final[0].timestamp,
        date_last=final[-1].timestamp,
    )


def load_corpus(paths, fmt: str, limit: Optional[int] = None) -> Corpus:
    """Read one or more files of the same format into a single corpus."""
    if isinstance(paths, (str, bytes)) or not isinstance(paths, (list, tuple)):
        paths = [paths]
    log = IngestLog()
    messages: list = []
    for path in paths:
        messages.extend(read_messages(path, fmt, log))
    for line in log.diagnostics:
        logger.info("skipped %s", line)
    return build_corpus(messages, limit=limit, n_missing=log.dropped)


def emit_jsonl(corpus_or_messages) -> str:
    """Canonical JSONL (ordinal order, fixed key order, LF endings)."""
    messages = getattr(corpus_or_messages, "messages", corpus_or_messages)
    lines = [json.dumps(m.as_dict(), ensure_ascii=False) for m in messages]
    return "".join(line + "\n" for line in lines)
