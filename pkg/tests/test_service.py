import pytest
from fastapi.testclient import TestClient

from indexsize.engine import EngineServerError, FaultProfile, Query, SimulatedEngine
from indexsize.fixtures import FixtureEngine, data_path, load_hce_fixture
from indexsize.live import LiveEngineClient, TokenBucket
from indexsize.probes import longitudinal_sum, years_between
from indexsize.report import RunConfig, run
from indexsize.service import create_app
from indexsize.universe import CoveragePolicy, UniverseConfig, derive_view, generate_universe

SITE = "ssstfsffsdffasdfs.com"


@pytest.fixture(scope="module")
def engine():
    universe = generate_universe(UniverseConfig(total_docs=20_000, seed=8, citation_density=2))
    view = derive_view(universe, CoveragePolicy.uniform(0.9, stub_rate=0.3), 8)
    return SimulatedEngine(view, FaultProfile(hce_rounding=True, server_error_terms=("a",)), seed=8)


@pytest.fixture(scope="module")
def http(engine):
    return TestClient(create_app(engine))


class FakeClock:
    def __init__(self):
        self.now = 0.0
        self.slept = []

    def __call__(self):
        return self.now

    def sleep(self, seconds):
        self.slept.append(seconds)
        self.now += seconds


def fast_client(http):
    return LiveEngineClient(client=http, rate_limit_per_minute=6000, burst=1000)


def test_health_and_capabilities(http):
    assert http.get("/health").json() == {"status": "ok", "engine": True}
    assert http.get("/engine/capabilities").json()["supports_paging"] is True


def test_count_matches_engine(http, engine):
    q = Query(year_range=(1990, 2013), include_patents=False)
    body = http.post("/engine/count", json=q.to_dict()).json()
    assert body["value"] == engine.count(q).value and body["rounded"] is True


def test_request_validation(http):
    assert http.post("/engine/count", json={"page_size": 50}).status_code == 422
    assert http.post("/engine/count", json={"year_range": [2000, 1990]}).status_code == 422
    assert http.post("/engine/count", json={"bogus": 1}).status_code == 422


def test_server_error_maps_to_503(http):
    resp = http.post("/engine/count", json={"term": "a", "excluded_site": SITE})
    assert resp.status_code == 503 and "server error" in resp.json()["detail"]


def test_no_engine_attached():
    http = TestClient(create_app())
    assert http.get("/health").json()["engine"] is False
    assert http.post("/engine/count", json={}).status_code == 503


def test_page_route_and_fixture_backend(http):
    page = http.post("/engine/page", json={"year_range": [2013, 2013], "page_size": 20}).json()
    assert len(page["ids"]) == 20 and page["capped"] is False
    fixture = TestClient(create_app(FixtureEngine(load_hce_fixture(data_path("published_hce.csv")))))
    assert fixture.post("/engine/page", json={}).status_code == 501


def test_estimate_routes(http):
    lp = http.post("/estimate/lincoln-petersen", json={"M": 100, "C": 80, "R": 20}).json()
    assert lp["estimate"] == 400
    sets = http.post("/estimate/lincoln-petersen", json={"a": [1, 2, 3, 4], "b": [3, 4, 5, 6]}).json()
    assert sets["estimate"] == 8
    assert http.post("/estimate/lincoln-petersen", json={"M": 1}).status_code == 422
    assert http.post("/estimate/lincoln-petersen", json={"M": 5, "C": 5, "R": 0}).status_code == 422
    kg = http.post("/estimate/khabsa-giles", json={"C": 47_799_627, "overlap": 0.418}).json()
    assert kg["estimate"] == 114_353_174
    ratio = http.post("/estimate/ratio", json={"factor": 3, "wos_size": 57_000_000}).json()
    assert ratio["diagnostics"]["language_decomposition"]["GSe"] == 111_150_000


def test_live_client_matches_local_engine(http, engine):
    client = fast_client(http)
    years = years_between(1990, 2013)
    _, remote = longitudinal_sum(client, years)
    _, local = longitudinal_sum(engine, years)
    assert remote == local
    page = client.fetch_page(Query(year_range=(2013, 2013)))
    assert page.ids == engine.fetch_page(Query(year_range=(2013, 2013))).ids
    assert client.capabilities()["backend"] == "mock-live"
    with pytest.raises(EngineServerError):
        client.count(Query(term="a", excluded_site=SITE))


def test_report_over_mock_live(http, engine):
    cfg = RunConfig(backend="mock-live", service_url="http://testserver", methods=["C2", "D1", "D3"],
                    years=(2000, 2013), audits=False).with_published_fixtures()
    result = run(cfg, engine=fast_client(http))
    expected = sum(engine.count(Query(term="1", excluded_site=SITE, category=c)).value
                   for c in ("articles", "case-law"))
    assert result.row("D1").estimate == expected
    assert result.row("C2").estimate == result.row("D3").estimate
    assert result.ok


def test_token_bucket_paces_requests():
    clock = FakeClock()
    bucket = TokenBucket(rate_per_minute=30, capacity=2, clock=clock, sleep=clock.sleep)
    waits = [bucket.acquire() for _ in range(5)]
    assert waits[:2] == [0.0, 0.0]
    assert waits[2:] == pytest.approx([2.0, 2.0, 2.0])
    clock.now += 60
    assert bucket.acquire() == 0.0
    with pytest.raises(ValueError):
        TokenBucket(0)


def test_live_client_rate_limit_applies(http):
    clock = FakeClock()
    client = LiveEngineClient(client=http, bucket=TokenBucket(60, 1, clock=clock, sleep=clock.sleep))
    for y in (2010, 2011, 2012):
        client.count(Query(year_range=(y, y)))
    assert clock.slept == pytest.approx([1.0, 1.0])
