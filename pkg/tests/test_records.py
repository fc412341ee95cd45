"""Dataset record validation and JSONL wire-format tests."""

import numpy as np
import pytest

from qflip import records


class TestBitstrings:
    def test_qubit_zero_is_rightmost(self):
        assert records.index_to_bits(1, 3) == "001"
        assert records.index_to_bits(4, 3) == "100"
        assert records.bits_to_index("001") == 1

    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_round_trip(self, n):
        for index in range(1 << n):
            assert records.bits_to_index(records.index_to_bits(index, n)) == index

    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            records.index_to_bits(8, 3)
        with pytest.raises(ValueError):
            records.index_to_bits(-1, 3)
        with pytest.raises(ValueError):
            records.bits_to_index("0a1")
        with pytest.raises(ValueError):
            records.bits_to_index("")


class TestCountsRecord:
    def test_counts_must_sum_to_shots(self):
        with pytest.raises(ValueError):
            records.CountsRecord(
                depth=1, input_index=0, sequence_id=0, shots=10, counts={0: 4, 1: 5}
            )

    def test_rejects_negative_fields(self):
        good = dict(depth=1, input_index=0, sequence_id=0, shots=4, counts={0: 4})
        records.CountsRecord(**good)
        for bad in (
            dict(good, depth=-1),
            dict(good, input_index=-1),
            dict(good, sequence_id=-1),
            dict(good, shots=0, counts={}),
            dict(good, counts={-1: 4}),
            dict(good, counts={0: -4, 1: 8}),
        ):
            with pytest.raises(ValueError):
                records.CountsRecord(**bad)

    def test_counts_coerced_to_ints(self):
        record = records.CountsRecord(
            depth=1, input_index=0, sequence_id=0, shots=4, counts={np.int64(2): np.int64(4)}
        )
        assert record.counts == {2: 4}
        assert all(type(k) is int and type(v) is int for k, v in record.counts.items())


class TestWireFormat:
    def test_exact_line(self):
        record = records.CountsRecord(
            depth=3, input_index=1, sequence_id=7, shots=100, counts={0: 61, 2: 39}
        )
        line = records.record_to_json(record, 2)
        assert line == '{"depth":3,"input":"01","seq":7,"shots":100,"counts":{"00":61,"10":39}}'
        back, n = records.record_from_json(line)
        assert n == 2
        assert back.counts == record.counts
        assert back.sort_key() == record.sort_key()

    def test_rejects_malformed_lines(self):
        for line in (
            "not json",
            "{}",
            '{"depth":1,"input":"0","seq":0,"shots":2,"counts":{"0":1}}',
            '{"depth":1,"input":"00","seq":0,"shots":2,"counts":{"000":2}}',
            '{"depth":1,"input":"00","seq":0,"shots":2,"counts":{"01":1}}',
        ):
            with pytest.raises(ValueError):
                records.record_from_json(line)


class TestDataset:
    def make_dataset(self):
        recs = [
            records.CountsRecord(depth=2, input_index=1, sequence_id=0, shots=4, counts={1: 4}),
            records.CountsRecord(depth=1, input_index=0, sequence_id=1, shots=4, counts={0: 3, 3: 1}),
            records.CountsRecord(depth=1, input_index=0, sequence_id=0, shots=4, counts={0: 4}),
        ]
        return records.Dataset(n=2, records=recs)

    def test_grouping(self):
        ds = self.make_dataset()
        assert ds.depths() == [1, 2]
        assert ds.input_indices() == [0, 1]
        assert len(ds.group(1, 0)) == 2
        assert len(ds.group(2, 1)) == 1
        assert ds.group(9, 0) == []

    def test_sorted_order(self):
        ds = self.make_dataset()
        keys = [r.sort_key() for r in ds.sorted_records()]
        assert keys == sorted(keys)

    def test_rejects_out_of_range_records(self):
        bad = records.CountsRecord(depth=1, input_index=5, sequence_id=0, shots=1, counts={0: 1})
        with pytest.raises(ValueError):
            records.Dataset(n=2, records=[bad])
        bad = records.CountsRecord(depth=1, input_index=0, sequence_id=0, shots=1, counts={4: 1})
        with pytest.raises(ValueError):
            records.Dataset(n=2, records=[bad])

    def test_file_round_trip(self, tmp_path):
        ds = self.make_dataset()
        path = tmp_path / "data.jsonl"
        ds.write_jsonl(path)
        back = records.Dataset.read_jsonl(path)
        assert back.n == 2
        assert len(back) == 3
        original = {r.sort_key(): r.counts for r in ds.records}
        loaded = {r.sort_key(): r.counts for r in back.records}
        assert loaded == original
        # canonical order makes rewrites byte-identical
        second = tmp_path / "again.jsonl"
        back.write_jsonl(second)
        assert path.read_bytes() == second.read_bytes()

    def test_read_reports_line_numbers(self, tmp_path):
        path = tmp_path / "data.jsonl"
        path.write_text(
            '{"depth":1,"input":"00","seq":0,"shots":2,"counts":{"00":2}}\n'
            "garbage\n"
        )
        with pytest.raises(ValueError, match=":2:"):
            records.Dataset.read_jsonl(path)

    def test_read_rejects_mixed_widths(self, tmp_path):
        path = tmp_path / "data.jsonl"
        path.write_text(
            '{"depth":1,"input":"00","seq":0,"shots":2,"counts":{"00":2}}\n'
            '{"depth":1,"input":"0","seq":1,"shots":2,"counts":{"0":2}}\n'
        )
        with pytest.raises(ValueError, match="qubit count"):
            records.Dataset.read_jsonl(path)

    def test_read_rejects_empty_file(self, tmp_path):
        path = tmp_path / "data.jsonl"
        path.write_text("\n\n")
        with pytest.raises(ValueError, match="empty"):
            records.Dataset.read_jsonl(path)
