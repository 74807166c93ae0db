"""
API 端点测试
使用 FastAPI TestClient 测试所有端点
"""

import sys
import os

# 确保项目根目录在 Python 路径中
PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from fastapi.testclient import TestClient

from backend.main import app
from engine.verilog_parser import parse_verilog

client = TestClient(app)

ADD8 = """module add8 (
  input [7:0] a,
  input [7:0] b,
  output [8:0] y
);
  assign y = a + b;
endmodule
"""

SMALL = {"max_iters": 6, "max_nodes": 5000, "ilp_timeout": 30}


# ========== /health ==========

class TestHealth:
    def test_health_returns_200(self):
        resp = client.get("/health")
        assert resp.status_code == 200

    def test_health_body(self):
        data = client.get("/health").json()
        assert data["status"] == "ok"
        assert "env" in data
        assert data["rules"] == 39

    def test_health_includes_store_status(self):
        data = client.get("/health").json()
        assert data["condition_store"] in ("found", "missing")


# ========== /api/rules ==========

class TestRules:
    def test_lists_whole_catalog(self):
        resp = client.get("/api/rules")
        assert resp.status_code == 200
        rules = resp.json()
        assert len(rules) == 39
        names = {r["name"] for r in rules}
        assert {"commutativity-add", "merge-left-shift", "mult-constant"} <= names

    def test_dynamic_rules_have_no_rhs(self):
        rules = {r["name"]: r for r in client.get("/api/rules").json()}
        assert rules["mult-constant"]["dynamic"]
        assert rules["mult-constant"]["rhs"] is None
        assert rules["commutativity-add"]["condition"] == "True"

    def test_class_filter(self):
        rules = client.get("/api/rules", params={"rule_class": "exchange"}).json()
        assert rules
        assert all(r["rule_class"] == "exchange" for r in rules)


# ========== /api/optimize ==========

class TestOptimize:
    def test_single_adder(self):
        resp = client.post("/api/optimize", json={"verilog": ADD8, "include_certificate": True, **SMALL})
        assert resp.status_code == 200
        data = resp.json()
        assert data["exit_code"] == 0
        assert data["report"]["cost_after"] == data["report"]["cost_before"]
        assert parse_verilog(data["verilog"]).name == "add8"
        assert data["certificate"][0] == ADD8
        assert data["manifest"]["length"] == len(data["certificate"])

    def test_certificate_is_optional(self):
        data = client.post("/api/optimize", json={"verilog": ADD8, **SMALL}).json()
        assert data["certificate"] is None

    def test_greedy_without_verification(self):
        resp = client.post("/api/optimize", json={
            "verilog": ADD8, "extract": "greedy", "verify": False, **SMALL,
        })
        assert resp.status_code == 200
        assert resp.json()["report"]["extraction"]["status"] == "greedy"

    def test_syntax_error(self):
        resp = client.post("/api/optimize", json={
            "verilog": "module m (input a, output y);\n  assign y = ;\nendmodule\n",
        })
        assert resp.status_code == 400

    def test_unknown_rule_class(self):
        resp = client.post("/api/optimize", json={"verilog": ADD8, "rules": "arith,quantum"})
        assert resp.status_code == 400

    def test_bad_extract_mode(self):
        resp = client.post("/api/optimize", json={"verilog": ADD8, "extract": "random"})
        assert resp.status_code == 422


# ========== /api/verify ==========

class TestVerify:
    def test_good_chain(self):
        commuted = ADD8.replace("a + b", "b + a")
        resp = client.post("/api/verify", json={
            "modules": [ADD8, commuted],
            "steps": [{}, {"rule": "commutativity-add"}],
        })
        assert resp.status_code == 200
        data = resp.json()
        assert data["fully_verified"]
        assert data["verdicts"] == ["exhaustive"]

    def test_broken_chain(self):
        bad = ADD8.replace("a + b", "a - b")
        resp = client.post("/api/verify", json={"modules": [ADD8, bad]})
        assert resp.status_code == 409
        detail = resp.json()["detail"]
        assert detail["step"] == 1
        cex = detail["counterexample"]
        assert (cex["a"] + cex["b"]) % 512 != (cex["a"] - cex["b"]) % 512

    def test_step_count_mismatch(self):
        resp = client.post("/api/verify", json={"modules": [ADD8, ADD8], "steps": [{}]})
        assert resp.status_code == 400

    def test_empty_chain_rejected(self):
        resp = client.post("/api/verify", json={"modules": []})
        assert resp.status_code == 422


# ========== /api/conditions/synthesize ==========

class TestSynthesize:
    def test_unconditional_rule(self):
        resp = client.post("/api/conditions/synthesize", json={"rule": "commutativity-add", "wmax": 2})
        assert resp.status_code == 200
        data = resp.json()
        assert data["condition"] == "True"
        assert data["true"] == data["maps"]
        assert data["record"]["source"] == "synthesized"

    def test_inline_patterns(self):
        resp = client.post("/api/conditions/synthesize", json={
            "lhs": "(+ w1 w2 s1 a w3 s2 b)",
            "rhs": "(+ w1 w3 s2 b w2 s1 a)",
            "wmax": 2,
        })
        assert resp.status_code == 200
        assert resp.json()["condition"] == "True"

    def test_unknown_rule(self):
        resp = client.post("/api/conditions/synthesize", json={"rule": "no-such-rule"})
        assert resp.status_code == 404

    def test_wmax_limit(self):
        resp = client.post("/api/conditions/synthesize", json={"rule": "commutativity-add", "wmax": 9})
        assert resp.status_code == 400

    def test_dynamic_rule(self):
        resp = client.post("/api/conditions/synthesize", json={"rule": "mult-constant", "wmax": 2})
        assert resp.status_code == 400

    def test_missing_patterns(self):
        resp = client.post("/api/conditions/synthesize", json={"lhs": "(+ w1 w2 s1 a w3 s2 b)"})
        assert resp.status_code == 400
