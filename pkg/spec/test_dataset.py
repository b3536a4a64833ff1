"""Dataset files, manifests, count tables, batch generation and verification."""

import dataclasses
import tempfile
from pathlib import Path

from unsolvable.dataset import (
    DISPLAY_NAMES, TABLE1_COUNTS, DatasetIOError, Manifest, SchemaError, TableRow,
    counts_by_domain, generate_records, generate_table, manifest_path, read_manifest,
    read_records, stats, verify_records, write_records,
)
from unsolvable.domains import UnknownDomain
from unsolvable.model import Difficulty, Domain, Label, Split, Tier
from unsolvable.testing import describe, expect, it

from spec.factories import InstanceFactory, RecordFactory


def flip(record):
    label = Label.UNSOLVABLE if record.instance.label is Label.SOLVABLE else Label.SOLVABLE
    return dataclasses.replace(record, instance=dataclasses.replace(record.instance, label=label))


with describe("Dataset"):

    with describe("JSON Lines"):

        @it("writes and reads records with a manifest")
        def test_round_trip():
            records = [RecordFactory(), RecordFactory(instance=InstanceFactory.unsolvable_hitori())]
            with tempfile.TemporaryDirectory() as tmp:
                path = Path(tmp) / "set.jsonl"
                manifest = write_records(records, path, config={"generation": {"workers": 1}})
                expect(read_records(path)).to_equal(records)
                stored = read_manifest(path)
                expect(stored).to_equal(manifest)
                expect(stored.counts).to_equal({"train": {"game24": {"solvable": 1},
                                                          "hitori": {"unsolvable": 1}}})
                expect(stored.matches(records)).to_be_true()
                expect(stored.matches(records[:1])).to_be_false()
                expect(manifest_path(path).name).to_equal("set.jsonl.manifest.json")

        @it("digests the generation config")
        def test_manifest_digest():
            a = Manifest.for_records([], {"generation": {"workers": 1}})
            b = Manifest.for_records([], {"generation": {"workers": 2}})
            expect(a.config_digest).to_not_equal(b.config_digest)
            expect(Manifest.from_dict(a.to_dict())).to_equal(a)

        @it("reports the line of a malformed record")
        def test_schema_error_line():
            with tempfile.TemporaryDirectory() as tmp:
                path = Path(tmp) / "bad.jsonl"
                write_records([RecordFactory()], path)
                with open(path, "a") as f:
                    f.write("{\"id\": \"x\"\n")
                error = expect(lambda: read_records(path)).to_raise(SchemaError)
                expect(error.line).to_equal(2)

        @it("names missing fields")
        def test_schema_error_missing():
            with tempfile.TemporaryDirectory() as tmp:
                path = Path(tmp) / "bad.jsonl"
                path.write_text("[1, 2]\n")
                expect(lambda: read_records(path)).to_raise(SchemaError, match="line 1")
                path.write_text("{\"id\": \"x\"}\n")
                expect(lambda: read_records(path)).to_raise(SchemaError, match="missing")

        @it("reads an empty file and skips blank lines")
        def test_empty_and_blank():
            with tempfile.TemporaryDirectory() as tmp:
                path = Path(tmp) / "empty.jsonl"
                path.write_text("")
                expect(read_records(path)).to_equal([])
                write_records([RecordFactory()], path)
                path.write_text(path.read_text() + "\n\n")
                expect(read_records(path)).to_have_length(1)
                expect(read_manifest(Path(tmp) / "none.jsonl")).to_be_none()

        @it("wraps unreadable paths")
        def test_missing_file():
            expect(lambda: read_records(Path("/nonexistent/set.jsonl"))).to_raise(DatasetIOError)

    with describe("stats"):

        @it("counts a generated 50/50 train set")
        def test_stats_generated():
            records = generate_records(Domain.GAME24, 50, 50, seed=42)
            table = stats(records)
            expect(table.row("train", "Game24")).to_equal((50, 50, 100))
            expect(table.totals("train")).to_equal((50, 50))
            expect(table.grand_total()).to_equal(100)

        @it("splits test mazes by difficulty")
        def test_stats_maze_rows():
            easy = InstanceFactory.open_maze()
            hard = InstanceFactory.open_maze(difficulty=Difficulty(Tier.HARD, (11, 11)), label=Label.UNSOLVABLE)
            records = [
                RecordFactory(instance=easy, split=Split.TEST),
                RecordFactory(instance=hard, split=Split.TEST),
                RecordFactory(instance=hard),
            ]
            table = stats(records)
            expect(table.row("test", "Maze(Easy)")).to_equal((1, 0, 1))
            expect(table.row("test", "Maze(Hard)")).to_equal((0, 1, 1))
            expect(table.row("train", "Maze")).to_equal((0, 1, 1))
            rendered = table.render()
            expect(rendered).to_contain("Train Total")
            expect(rendered).to_contain("Maze(Hard)")
            expect(rendered.index("Train")).to_be_between(0, rendered.index("Test"))

        @it("renders an empty table")
        def test_stats_empty():
            expect(stats([]).render()).to_contain("Total")
            expect(stats([]).grand_total()).to_equal(0)

        @it("counts labels per domain")
        def test_counts_by_domain():
            records = [RecordFactory(), RecordFactory(), RecordFactory(instance=InstanceFactory.unsolvable_hitori())]
            expect(counts_by_domain(records)).to_equal({
                "game24": {"solvable": 2, "unsolvable": 0},
                "hitori": {"solvable": 0, "unsolvable": 1},
            })

    with describe("generation"):

        @it("is deterministic, distinct and sorted by id")
        def test_generate_records():
            a = generate_records(Domain.MAZE, 3, 3, seed=7, split=Split.TEST)
            b = generate_records(Domain.MAZE, 3, 3, seed=7, split=Split.TEST)
            expect(a).to_equal(b)
            expect(len({r.instance.fingerprint() for r in a})).to_equal(6)
            ids = [r.instance.id for r in a]
            expect(ids).to_equal(sorted(ids))
            expect(all(r.instance.prompt for r in a)).to_be_true()

        @it("gives the same records for any worker count", tags=["slow"])
        def test_generate_workers():
            serial = generate_records(Domain.HAM_PATH, 4, 4, seed=3, workers=1)
            parallel = generate_records(Domain.HAM_PATH, 4, 4, seed=3, workers=2)
            expect(parallel).to_equal(serial)

        @it("regenerates duplicates from fresh seeds")
        def test_generate_duplicates():
            records = generate_records(Domain.GAME24, 30, 0, seed=1, size=4)
            expect(len({tuple(r.instance.payload["numbers"]) for r in records})).to_equal(30)

        @it("refuses domains without a puzzle generator")
        def test_generate_math():
            expect(lambda: generate_records(Domain.MATH, 1, 1, seed=0)).to_raise(UnknownDomain)

        @it("builds table rows for a split")
        def test_generate_table():
            rows = [TableRow(Domain.GAME24, Tier.EASY, 2, 1), TableRow(Domain.MAZE, Tier.HARD, 1, 2)]
            records = generate_table(Split.TEST, seed=5, rows=rows)
            table = stats(records)
            expect(table.row("test", "Game24")).to_equal((2, 1, 3))
            expect(table.row("test", "Maze(Hard)")).to_equal((1, 2, 3))

        @it("reproduces the reference counts for both splits", tags=["slow"])
        def test_generate_table_reference_counts():
            for split in (Split.TRAIN, Split.TEST):
                records = generate_table(split, seed=2025, workers=4)
                expect(verify_records(records)).to_equal([])
                table = stats(records)
                expected_total = 0
                for row in TABLE1_COUNTS[split]:
                    name = DISPLAY_NAMES[row.domain]
                    if row.domain is Domain.MAZE and split is Split.TEST:
                        name += "(Easy)" if row.tier is Tier.EASY else "(Hard)"
                    total = row.solvable + row.unsolvable
                    expected_total += total
                    expect(table.row(split.value, name)).to_equal(
                        (row.solvable, row.unsolvable, total), f"{split.value} {name}")
                expect(sum(table.totals(split.value))).to_equal(expected_total)

    with describe("verify_records"):

        @it("accepts freshly generated records")
        def test_verify_clean():
            records = (generate_records(Domain.GAME24, 3, 3, seed=9)
                       + generate_records(Domain.HITORI, 2, 2, seed=9)
                       + generate_records(Domain.HAM_CYCLE, 2, 2, seed=9)
                       + generate_records(Domain.MAZE, 2, 2, seed=9))
            expect(verify_records(records)).to_equal([])

        @it("flags a flipped label")
        def test_verify_flipped():
            records = generate_records(Domain.GAME24, 2, 2, seed=9)
            records[0] = flip(records[0])
            mismatches = verify_records(records)
            expect(mismatches).to_have_length(1)
            expect(mismatches[0].id).to_equal(records[0].instance.id)

        @it("flags a broken witness")
        def test_verify_witness():
            record = generate_records(Domain.GAME24, 1, 0, seed=9)[0]
            broken = dataclasses.replace(record, instance=dataclasses.replace(record.instance, witness="1+1"))
            expect(verify_records([broken])[0].detail).to_equal("witness rejected")

        @it("reports walled-off mazes and payloads that fail to load")
        def test_verify_error():
            bad = RecordFactory(instance=InstanceFactory(domain=Domain.MAZE, payload={"rows": ["S#", "#E"]}))
            expect(verify_records([bad])[0].certified).to_equal("unsolvable")
            broken = RecordFactory(instance=InstanceFactory(domain=Domain.MAZE, payload={"rows": ["..", ".."]}))
            expect(verify_records([broken])[0].certified).to_equal("error")
