import collections

import numpy as np
import pytest

from nli.deepcoder import (
    DeepCoderConfig,
    LexicalError,
    ParseError,
    SPLIT_NAMES,
    TOKEN_TABLE,
    TOKEN_TO_ID,
    VOCAB_SIZE,
    comparison,
    decode_inputs,
    detokenize,
    execute,
    parse,
    sample_task,
    tokenize,
    validate_record,
)
from nli.deepcoder.dsl import (
    DSLProgram,
    ExecutionError,
    LAMBDAS,
    LAMBDAS_BY_NAME,
    OPERATIONS,
    Statement,
    ValueRangeError,
    VarRef,
)
from nli.deepcoder.sampler import GROUP_A, GROUP_B, RejectionStats
from nli.tasks import SPLIT_TEST_OOD, SPLIT_TRAIN


class TestTokenTable:
    def test_size_exactly_153(self):
        assert VOCAB_SIZE == 153
        assert len(set(TOKEN_TABLE)) == 153

    def test_category_counts(self):
        assert len(OPERATIONS) == 15
        assert len(LAMBDAS) == 19
        ints = [t for t in TOKEN_TABLE if t.lstrip("-").isdigit() and not t.startswith("x")]
        assert len(ints) == 101

    def test_fixed_special_ids(self):
        assert TOKEN_TO_ID["PAD"] == 0
        assert TOKEN_TO_ID["<BOS>"] == 1
        assert TOKEN_TO_ID["<EOS>"] == 2
        assert TOKEN_TO_ID["|"] == 3

    def test_published_id_assignments(self):
        # ids from the documented listed order, cross-checked against the
        # published tokenization example
        assert TOKEN_TO_ID["="] == 4
        assert TOKEN_TO_ID["INPUT"] == 5
        assert TOKEN_TO_ID["x0"] == 42
        assert TOKEN_TO_ID["x1"] == 43
        assert TOKEN_TO_ID["Head"] == 8
        assert TOKEN_TO_ID["Map"] == 18
        assert TOKEN_TO_ID["Filter"] == 19
        assert TOKEN_TO_ID["(+1)"] == 23
        assert TOKEN_TO_ID["(>0)"] == 33
        assert TOKEN_TO_ID["-50"] == 52
        assert TOKEN_TO_ID["50"] == 152


class TestTokenize:
    def test_four_line_example(self):
        text = "x0 = INPUT | x1 = Map (+1) x0 | x2 = Filter (>0) x1 | x3 = Head x2"
        ids = tokenize(text)
        assert ids[0] == 1 and ids[-1] == 2
        # every token carries its documented id
        assert ids == [1, 42, 4, 5, 3, 43, 4, 18, 23, 42, 3, 44, 4, 19, 33, 43, 3, 45, 4, 8, 44, 2]
        assert detokenize(ids) == text

    def test_roundtrip_on_sampled_programs(self):
        cfg = DeepCoderConfig()
        n = 0
        for split in SPLIT_NAMES:
            for i in range(200):
                rec = sample_task(split, cfg, seed=11, index=i, record_split=SPLIT_TRAIN)
                assert detokenize(tokenize(rec.program)) == rec.program
                n += 1
        assert n == 1000

    def test_whitespace_normalization(self):
        a = "x0 = INPUT |  x1 =   Head x0"
        b = "x0 = INPUT | x1 = Head x0"
        assert tokenize(a) == tokenize(b)
        assert detokenize(tokenize(a)) == b

    def test_unknown_token(self):
        with pytest.raises(LexicalError) as err:
            tokenize("x1 = Frobnicate x0")
        assert err.value.token == "Frobnicate"
        assert err.value.position == 2


class TestParse:
    def test_single_op_ast(self):
        prog = parse(tokenize("x0 = INPUT | x1 = Head x0"))
        expected = DSLProgram(
            statements=(
                Statement(var=0, op="INPUT"),
                Statement(var=1, op="Head", lam=None, args=(VarRef(0),)),
            )
        )
        assert prog == expected
        assert prog.output_var == 1

    def test_missing_lambda(self):
        with pytest.raises(ParseError, match="requires a lambda"):
            parse("x0 = INPUT | x1 = Map x0")

    def test_use_before_def(self):
        with pytest.raises(ParseError, match="before definition"):
            parse("x0 = INPUT | x1 = Sort x2")

    def test_bad_arity(self):
        with pytest.raises(ParseError, match="expects"):
            parse("x0 = INPUT | x1 = Head x0 x0")

    def test_type_mismatch(self):
        with pytest.raises(ParseError, match="type mismatch"):
            parse("x0 = INPUT | x1 = Head x0 | x2 = Sort x1")

    def test_error_names_line(self):
        with pytest.raises(ParseError, match="line 3"):
            parse("x0 = INPUT | x1 = Sort x0 | x2 = Map x1")

    def test_int_literals_and_list_literals(self):
        prog = parse("x0 = INPUT | x1 = Take 3 x0")
        assert execute(prog, [[5, 4, 3, 2, 1]]) == [5, 4, 3]
        prog = parse("x0 = INPUT | x1 = ZipWith (+) x0 [ 1 2 3 ]")
        assert execute(prog, [[10, 20, 30]]) == [11, 22, 33]

    def test_text_roundtrip_through_ast(self):
        text = "x0 = INPUT | x1 = Sort x0 | x2 = Map (*2) x1"
        assert parse(text).to_text() == text


class TestExecute:
    def test_published_pipeline(self):
        # Sort -> Map(+1) -> Filter(greater-than-3) -> Sum on [3,1,4,1,5]
        prog = DSLProgram(
            statements=(
                Statement(var=0, op="INPUT"),
                Statement(var=1, op="Sort", args=(VarRef(0),)),
                Statement(var=2, op="Map", lam=LAMBDAS_BY_NAME["(+1)"], args=(VarRef(1),)),
                Statement(var=3, op="Filter", lam=comparison(">", 3), args=(VarRef(2),)),
                Statement(var=4, op="Sum", args=(VarRef(3),)),
            )
        )
        trace = []
        assert execute(prog, [3, 1, 4, 1, 5], trace=trace) == 15
        assert trace[1] == [1, 1, 3, 4, 5]
        assert trace[2] == [2, 2, 4, 5, 6]
        assert trace[3] == [4, 5, 6]

    def test_reverse_involution(self):
        prog = parse("x0 = INPUT | x1 = Reverse x0 | x2 = Reverse x1")
        rng = np.random.default_rng(0)
        for _ in range(1000):
            l = [int(v) for v in rng.integers(-10, 11, size=int(rng.integers(0, 9)))]
            assert execute(prog, [l]) == l

    def test_partial_ops_raise(self):
        for text in ("x1 = Head x0", "x1 = Last x0", "x1 = Minimum x0", "x1 = Maximum x0"):
            prog = parse("x0 = INPUT | " + text)
            with pytest.raises(ExecutionError):
                execute(prog, [[]])

    def test_access_out_of_bounds(self):
        prog = parse("x0 = INPUT | x1 = Access 5 x0")
        with pytest.raises(ExecutionError):
            execute(prog, [[1, 2]])
        assert execute(prog, [[0, 1, 2, 3, 4, 5, 6]]) == 5

    def test_range_violation(self):
        prog = parse("x0 = INPUT | x1 = Map (*4) x0")
        with pytest.raises(ValueRangeError):
            execute(prog, [[20]])

    def test_sort_idempotent_sum_reversal_invariant(self):
        rng = np.random.default_rng(3)
        sort1 = parse("x0 = INPUT | x1 = Sort x0")
        sort2 = parse("x0 = INPUT | x1 = Sort x0 | x2 = Sort x1")
        for _ in range(200):
            l = [int(v) for v in rng.integers(-10, 11, size=6)]
            assert execute(sort1, [l]) == execute(sort2, [l])
            assert sum(execute(parse("x0 = INPUT | x1 = Reverse x0"), [l])) == sum(l)

    def test_scanl1_semantics(self):
        prog = parse("x0 = INPUT | x1 = Scanl1 (+) x0")
        assert execute(prog, [[1, 2, 3, 4]]) == [1, 3, 6, 10]
        assert execute(prog, [[]]) == []
        prog = parse("x0 = INPUT | x1 = Scanl1 (min) x0")
        assert execute(prog, [[3, 1, 4, 1]]) == [3, 1, 1, 1]

    def test_truncating_division(self):
        prog = parse("x0 = INPUT | x1 = Map (/2) x0")
        assert execute(prog, [[-3, 3, -1, 5]]) == [-1, 1, 0, 2]


class TestSampler:
    def test_length_split_test_is_five_ops(self):
        cfg = DeepCoderConfig()
        for i in range(120):
            rec = sample_task("length", cfg, seed=0, index=i, record_split=SPLIT_TEST_OOD)
            assert parse(rec.program).num_op_lines == 5

    def test_length_split_train_is_1_to_4(self):
        cfg = DeepCoderConfig()
        lengths = set()
        for i in range(120):
            rec = sample_task("length", cfg, seed=0, index=i, record_split=SPLIT_TRAIN)
            n = parse(rec.program).num_op_lines
            assert 1 <= n <= 4
            lengths.add(n)
        assert lengths == {1, 2, 3, 4}

    def test_records_validate_under_interpreter(self):
        cfg = DeepCoderConfig()
        checked = 0
        for split in SPLIT_NAMES:
            for tag in (SPLIT_TRAIN, SPLIT_TEST_OOD):
                for i in range(40):
                    rec = sample_task(split, cfg, seed=4, index=i, record_split=tag)
                    assert validate_record(rec), rec.program
                    checked += 1
        assert checked == 400

    def test_compose_concepts_split(self):
        cfg = DeepCoderConfig()
        for i in range(80):
            rec = sample_task(
                "compose-different-concepts", cfg, seed=1, index=i, record_split=SPLIT_TRAIN
            )
            ops = parse(rec.program).operation_names()
            assert set(ops) <= set(GROUP_A) or set(ops) <= set(GROUP_B)
            rec = sample_task(
                "compose-different-concepts", cfg, seed=1, index=i, record_split=SPLIT_TEST_OOD
            )
            ops = parse(rec.program).operation_names()
            assert set(ops) & set(GROUP_A) and set(ops) & set(GROUP_B)

    def test_switch_order_split(self):
        cfg = DeepCoderConfig()
        for i in range(60):
            rec = sample_task(
                "switch-concept-order", cfg, seed=2, index=i, record_split=SPLIT_TRAIN
            )
            groups = ["A" if op in GROUP_A else "B" for op in parse(rec.program).operation_names()]
            assert "A" in groups and "B" in groups
            assert groups == sorted(groups)  # all A lines precede all B lines
            rec = sample_task(
                "switch-concept-order", cfg, seed=2, index=i, record_split=SPLIT_TEST_OOD
            )
            groups = ["A" if op in GROUP_A else "B" for op in parse(rec.program).operation_names()]
            assert "A" in groups and "B" in groups
            assert groups == sorted(groups, reverse=True)

    def test_new_operation_split_isolation_frequency(self):
        cfg = DeepCoderConfig()
        isolated = 0
        n = 1200
        for i in range(n):
            rec = sample_task(
                "compose-new-operation", cfg, seed=6, index=i, record_split=SPLIT_TRAIN
            )
            ops = parse(rec.program).operation_names()
            if "Scanl1" in ops:
                assert ops == ["Scanl1"]
                isolated += 1
        assert abs(isolated / n - 0.25) <= 0.02

    def test_new_operation_test_composes(self):
        cfg = DeepCoderConfig()
        for i in range(60):
            rec = sample_task(
                "compose-new-operation", cfg, seed=6, index=i, record_split=SPLIT_TEST_OOD
            )
            ops = parse(rec.program).operation_names()
            assert "Scanl1" in ops and len(ops) >= 2

    def test_functionality_split_lambdas(self):
        cfg = DeepCoderConfig()
        for i in range(60):
            rec = sample_task(
                "add-operation-functionality", cfg, seed=8, index=i, record_split=SPLIT_TRAIN
            )
            for st in parse(rec.program).statements:
                if st.op == "Scanl1":
                    assert st.lam.name in ("(-)", "(min)")
            rec = sample_task(
                "add-operation-functionality", cfg, seed=8, index=i, record_split=SPLIT_TEST_OOD
            )
            lams = [st.lam.name for st in parse(rec.program).statements if st.op == "Scanl1"]
            assert any(name in ("(+)", "(*)", "(max)") for name in lams)

    def test_determinism(self):
        cfg = DeepCoderConfig()
        a = sample_task("length", cfg, seed=5, index=3, record_split=SPLIT_TRAIN)
        b = sample_task("length", cfg, seed=5, index=3, record_split=SPLIT_TRAIN)
        assert a == b

    def test_identity_tasks_rejected(self):
        cfg = DeepCoderConfig()
        for i in range(100):
            rec = sample_task("length", cfg, seed=9, index=i, record_split=SPLIT_TRAIN)
            assert any(p.x != p.y for p in rec.pairs)

    def test_encode_decode_inputs(self):
        from nli.deepcoder.sampler import encode_inputs

        x = encode_inputs([[1, -3], [0, 50]])
        assert decode_inputs(x) == [[1, -3], [0, 50]]
        assert len(x) == 20

    def test_unknown_split_rejected(self):
        with pytest.raises(Exception, match="unknown split"):
            sample_task("bogus", DeepCoderConfig(), 0, 0, SPLIT_TRAIN)
