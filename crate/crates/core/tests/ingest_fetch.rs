mod support;

use chrono::{Days, NaiveDate};
use icecast_core::ingest::{
    dedupe, fetch_series, normalize, parse_records, serialize_records, sort_by_interval, validate, IceObservation,
    SeriesQuery,
};
use icecast_core::Error;
use proptest::prelude::*;
use support::mock_http::MockServer;

fn base_day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2012, 1, 1).unwrap()
}

fn arb_obs() -> impl Strategy<Value = IceObservation> {
    (1u32..6, 0u64..700, 0.0f64..=1.0).prop_map(|(p, d, c)| {
        IceObservation::on_day(p, base_day() + Days::new(d), c, "file")
    })
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(recs in prop::collection::vec(arb_obs(), 0..60)) {
        let text = serialize_records(&recs);
        prop_assert_eq!(parse_records(&text).unwrap(), recs);
    }

    #[test]
    fn interval_sort_matches_filter_then_sort(
        recs in prop::collection::vec(arb_obs(), 0..1000),
        point in 1u32..6,
        a in 0u64..700,
        b in 0u64..700,
    ) {
        let (lo, hi) = (a.min(b), a.max(b));
        let q = SeriesQuery::new(point, base_day() + Days::new(lo), base_day() + Days::new(hi)).unwrap();
        let got = sort_by_interval(&recs, &q);

        // Brute force: keep in input order then insertion-sort by timestamp.
        let mut expected: Vec<IceObservation> = Vec::new();
        for r in &recs {
            let d = r.day();
            if r.point_id == point && q.from <= d && d <= q.to {
                let pos = expected.iter().position(|e| e.timestamp > r.timestamp).unwrap_or(expected.len());
                expected.insert(pos, r.clone());
            }
        }
        prop_assert!(got.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn dedupe_is_idempotent(recs in prop::collection::vec(arb_obs(), 0..200), dup_every in 1usize..5) {
        let mut with_dups = recs.clone();
        with_dups.extend(recs.iter().step_by(dup_every).cloned());
        if let Ok(once) = normalize(with_dups) {
            let twice = dedupe(&once).unwrap();
            prop_assert_eq!(twice, once);
        }
    }

    #[test]
    fn validate_does_not_mutate(r in arb_obs()) {
        let before = r.clone();
        let out = validate(&r).unwrap().clone();
        prop_assert_eq!(&out, &before);
        prop_assert_eq!(r, before);
    }
}

#[test]
fn fetch_returns_served_records() {
    let body = "#obs v1\n2012-01-01T00:00:00Z,2,0.1\n2012-01-02T00:00:00Z,2,0.2\n2012-01-03T00:00:00Z,2,0.3\n";
    let server = MockServer::start(200, body);
    let q = SeriesQuery::new(2, base_day(), base_day() + Days::new(2)).unwrap();
    let recs = fetch_series(&server.url, &q).unwrap();
    assert_eq!(recs.len(), 3);
    assert!(recs.iter().all(|r| r.source == "fetch" && r.point_id == 2));
    assert_eq!(
        server.requests(),
        vec!["/obs?point=2&from=2012-01-01&to=2012-01-03".to_string()]
    );
}

#[test]
fn fetch_surfaces_http_status() {
    let server = MockServer::start(500, "boom");
    let q = SeriesQuery::new(1, base_day(), base_day()).unwrap();
    match fetch_series(&server.url, &q) {
        Err(Error::Fetch(msg)) => assert!(msg.contains("500"), "{msg}"),
        other => panic!("expected fetch error, got {other:?}"),
    }
}

#[test]
fn fetch_is_all_or_nothing() {
    let body = "#obs v1\n2012-01-01T00:00:00Z,1,0.1\n2012-01-02T00:00:00Z,1,1.7\n";
    let server = MockServer::start(200, body);
    let q = SeriesQuery::new(1, base_day(), base_day() + Days::new(1)).unwrap();
    assert!(matches!(fetch_series(&server.url, &q), Err(Error::Range { .. })));
}

#[test]
fn fetch_transport_failure() {
    // Bind then drop to get a port with nothing listening.
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let q = SeriesQuery::new(1, base_day(), base_day()).unwrap();
    assert!(matches!(
        fetch_series(&format!("http://127.0.0.1:{port}/obs"), &q),
        Err(Error::Fetch(_))
    ));
}
