"""Pond serialization: canonical bytes, validation, replay."""

from __future__ import annotations

import json
import random
from dataclasses import replace
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from helpers import FIXED_TIME, build_fixture10, fixed_clock, make_entry, make_pond, random_pond
from depsmell.errors import CacheMiss, MalformedPond, SchemaVersionMismatch
from depsmell.model import (
    NOT_FOUND,
    SOURCE_REPLAY,
    UNKNOWN,
    NormalizedRepoUrl,
    PackageId,
    Status,
)
from depsmell.pond import (
    ReplayFetcher,
    dumps_pond,
    format_timestamp,
    load_pond,
    loads_pond,
    parse_timestamp,
    save_pond,
)

GOLDEN = Path(__file__).parent / "fixtures" / "ponds" / "fixture10.json"


class TestTimestamps:
    def test_whole_seconds(self):
        assert format_timestamp(FIXED_TIME) == "2026-08-14T12:00:00Z"

    def test_fraction_trimmed(self):
        moment = FIXED_TIME.replace(microsecond=123000)
        assert format_timestamp(moment) == "2026-08-14T12:00:00.123Z"

    def test_full_microseconds(self):
        moment = FIXED_TIME.replace(microsecond=123456)
        assert format_timestamp(moment) == "2026-08-14T12:00:00.123456Z"

    def test_naive_rejected(self):
        with pytest.raises(ValueError):
            format_timestamp(datetime(2026, 1, 1))

    def test_offset_converted_to_utc(self):
        eastern = timezone(timedelta(hours=-4))
        moment = datetime(2026, 8, 14, 8, 0, 0, tzinfo=eastern)
        assert format_timestamp(moment) == "2026-08-14T12:00:00Z"

    def test_parse_round_trip(self):
        for text in ["2026-08-14T12:00:00Z", "2026-08-14T12:00:00.5Z", "2001-01-01T00:00:00.000001Z"]:
            assert format_timestamp(parse_timestamp(text)) == text.replace(".5Z", ".5Z")

    @pytest.mark.parametrize(
        "bad",
        ["", "yesterday", "2026-08-14T12:00:00", "2026-08-14T12:00:00+00:00", "2026-13-01T00:00:00Z"],
    )
    def test_parse_rejects(self, bad):
        with pytest.raises(MalformedPond):
            parse_timestamp(bad)

    @given(st.datetimes(timezones=st.just(timezone.utc)))
    def test_format_parse_identity(self, moment):
        assert parse_timestamp(format_timestamp(moment)) == moment


class TestRoundTrip:
    def test_loads_reproduces_structure(self):
        pond = build_fixture10()
        loaded = loads_pond(dumps_pond(pond))
        assert loaded == pond

    def test_second_dump_is_byte_identical(self):
        pond = build_fixture10()
        once = dumps_pond(pond)
        assert dumps_pond(loads_pond(once)) == once

    def test_golden_bytes(self):
        assert dumps_pond(build_fixture10()) == GOLDEN.read_text(encoding="utf-8")

    def test_golden_loads(self):
        assert load_pond(GOLDEN) == build_fixture10()

    def test_save_and_load(self, tmp_path):
        pond = build_fixture10()
        target = tmp_path / "deep" / "pond.json"
        save_pond(pond, target)
        assert load_pond(target) == pond

    def test_entries_serialized_in_sorted_order(self):
        entries = [make_entry("zzz", "1.0.0"), make_entry("aaa", "2.0.0"), make_entry("aaa", "1.0.0")]
        text = dumps_pond(make_pond(entries))
        keys = list(json.loads(text)["entries"])
        assert keys == ["aaa@1.0.0", "aaa@2.0.0", "zzz@1.0.0"]

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000))
    def test_random_ponds_round_trip(self, seed):
        pond = random_pond(random.Random(seed))
        once = dumps_pond(pond)
        loaded = loads_pond(once)
        assert loaded == pond
        assert dumps_pond(loaded) == once


class TestValidation:
    def test_key_id_mismatch(self):
        pond = make_pond([])
        pond.entries[PackageId("a", "1.0.0")] = make_entry("b", "1.0.0")
        with pytest.raises(ValueError, match="carries id"):
            dumps_pond(pond)

    def test_repo_required_when_url_normalizes(self):
        entry = make_entry("a", "1.0.0", url="https://github.com/x/y")
        pond = make_pond([replace(entry, repo=None)])
        with pytest.raises(ValueError, match="exactly when"):
            dumps_pond(pond)

    def test_repo_forbidden_without_usable_url(self):
        donor = make_entry("a", "1.0.0", url="https://github.com/x/y")
        pond = make_pond([replace(donor, repository_url_raw=None)])
        with pytest.raises(ValueError, match="exactly when"):
            dumps_pond(pond)

    def test_repo_url_must_match_raw(self):
        donor = make_entry("a", "1.0.0", url="https://github.com/x/y")
        wrong = replace(donor.repo, url=NormalizedRepoUrl("github.com", "other", "place"))
        pond = make_pond([replace(donor, repo=wrong)])
        with pytest.raises(ValueError, match="disagrees"):
            dumps_pond(pond)


def corrupt(mutator):
    """A fixture10 JSON document with one mutation applied."""
    doc = json.loads(GOLDEN.read_text(encoding="utf-8"))
    mutator(doc)
    return json.dumps(doc)


class TestLoadErrors:
    def test_invalid_json(self):
        with pytest.raises(MalformedPond, match="invalid JSON"):
            loads_pond("{nope")

    def test_non_object(self):
        with pytest.raises(MalformedPond):
            loads_pond("[1, 2]")

    def test_schema_mismatch(self):
        text = corrupt(lambda d: d.update(schema_version=2))
        with pytest.raises(SchemaVersionMismatch):
            loads_pond(text)

    def test_missing_schema_version(self):
        text = corrupt(lambda d: d.pop("schema_version"))
        with pytest.raises(MalformedPond):
            loads_pond(text)

    def test_bad_package_manager(self):
        text = corrupt(lambda d: d.update(package_manager="cargo"))
        with pytest.raises(MalformedPond):
            loads_pond(text)

    def test_entry_key_disagrees_with_body(self):
        def mutate(doc):
            doc["entries"]["pkg-a@1.0.0"]["version"] = "9.9.9"

        with pytest.raises(MalformedPond, match="disagrees"):
            loads_pond(corrupt(mutate))

    def test_direct_must_be_boolean(self):
        def mutate(doc):
            doc["entries"]["pkg-a@1.0.0"]["direct"] = "yes"

        with pytest.raises(MalformedPond, match="boolean"):
            loads_pond(corrupt(mutate))

    def test_illegal_state_value(self):
        def mutate(doc):
            doc["entries"]["pkg-a@1.0.0"]["registry"]["deprecation"]["state"] = "maybe"

        with pytest.raises(MalformedPond, match="illegal state"):
            loads_pond(corrupt(mutate))

    def test_illegal_source(self):
        def mutate(doc):
            doc["entries"]["pkg-a@1.0.0"]["registry"]["source"] = "guess"

        with pytest.raises(MalformedPond, match="illegal source"):
            loads_pond(corrupt(mutate))

    def test_bad_timestamp(self):
        def mutate(doc):
            doc["entries"]["pkg-a@1.0.0"]["registry"]["fetched_at"] = "noonish"

        with pytest.raises(MalformedPond, match="timestamp"):
            loads_pond(corrupt(mutate))

    def test_gating_violation_rejected(self):
        # pkg-c is recorded 404; claiming fork knowledge anyway is illegal.
        def mutate(doc):
            doc["entries"]["pkg-c@0.3.2"]["repo"]["is_fork"]["state"] = "fork"

        with pytest.raises(MalformedPond):
            loads_pond(corrupt(mutate))

    def test_repo_without_usable_url_rejected(self):
        def mutate(doc):
            doc["entries"]["pkg-i@1.0.0"]["repository_url_raw"] = None
            doc["entries"]["pkg-i@1.0.0"]["registry"]["repository_url_raw"] = None

        with pytest.raises(MalformedPond, match="exactly when"):
            loads_pond(corrupt(mutate))

    def test_missing_pond_file(self, tmp_path):
        with pytest.raises(MalformedPond, match="cannot read"):
            load_pond(tmp_path / "absent.json")


class TestReplayFetcher:
    def test_metadata_hit_is_marked_replay(self):
        pond = build_fixture10()
        fetcher = ReplayFetcher(pond)
        fetch = fetcher.fetch_metadata(PackageId("pkg-a", "1.0.0"))
        assert fetch.metadata.source == SOURCE_REPLAY
        assert fetch.metadata.repository_url_raw is None

    def test_metadata_preserves_monorepo_directory(self):
        entry = make_entry(
            "mono", "1.0.0", url="https://github.com/m/r", monorepo_directory="packages/mono"
        )
        fetcher = ReplayFetcher(make_pond([entry]))
        assert fetcher.fetch_metadata(PackageId("mono", "1.0.0")).monorepo_directory == "packages/mono"

    def test_metadata_miss_raises(self):
        fetcher = ReplayFetcher(build_fixture10())
        with pytest.raises(CacheMiss, match="ghost@1.0.0"):
            fetcher.fetch_metadata(PackageId("ghost", "1.0.0"))

    def test_probe_hit_returns_recorded_status(self):
        pond = build_fixture10()
        fetcher = ReplayFetcher(pond)
        pkg = PackageId("pkg-c", "0.3.2")
        recorded = pond.entries[pkg].repo
        assert fetcher.probe(recorded.url, pkg) == recorded
        assert recorded.accessibility.state == NOT_FOUND

    def test_probe_miss_is_gated_unknown(self):
        fetcher = ReplayFetcher(build_fixture10(), clock=fixed_clock)
        url = NormalizedRepoUrl("github.com", "acme", "elsewhere")
        status = fetcher.probe(url, PackageId("ghost", "1.0.0"))
        assert status.accessibility.state == UNKNOWN
        assert "replay miss" in status.accessibility.detail
        assert status.is_fork.state == UNKNOWN
        assert status.probed_at == FIXED_TIME

    def test_probe_url_mismatch_is_miss(self):
        pond = build_fixture10()
        fetcher = ReplayFetcher(pond, clock=fixed_clock)
        other = NormalizedRepoUrl("github.com", "acme", "renamed")
        status = fetcher.probe(other, PackageId("pkg-c", "0.3.2"))
        assert status.accessibility.state == UNKNOWN
