mod common;

use std::time::Duration;

use chartlens::lines::{detect_lines, LineExtractor, LineMarkConfig, RemoteLineExtractor};
use chartlens::refine::{refine_region, RefineConfig, RefineError, RefinementBackend};
use chartlens::sidecar::{RemoteRefiner, SidecarClient};
use chartlens::{ChartImage, ChartKind, Dims, Geometry, Point, Rect, Region, RleMask, SpanSet};
use common::{Reply, StubServer};

fn client(s: &StubServer, timeout_ms: u64) -> SidecarClient {
    SidecarClient::new(s.base_url.clone(), Duration::from_millis(timeout_ms), 4)
}

fn chart() -> ChartImage {
    ChartImage::filled("c", 40, 30, [255, 255, 255]).unwrap()
}

fn mask_reply(rect: Rect, dims: Dims, score: f64) -> String {
    let rle = RleMask::from_spans(dims, &SpanSet::from_rect(&rect));
    serde_json::json!({"mask_rle": rle.encode_counts(), "width": dims.width, "height": dims.height, "score": score}).to_string()
}

#[test]
fn health_reports_models_loaded() {
    let s = StubServer::start(|_, r| {
        assert_eq!((r.method.as_str(), r.path.as_str()), ("GET", "/healthz"));
        Reply::json(200, r#"{"models_loaded": true}"#)
    });
    assert!(client(&s, 2000).health().unwrap().models_loaded);
}

#[test]
fn refine_request_and_mask_round_trip() {
    let dims = Dims::new(40, 30);
    let s = StubServer::start(move |_, _| Reply::json(200, mask_reply(Rect::new(11, 6, 29, 24), dims, 0.93)));
    let refiner = RemoteRefiner::new(client(&s, 2000));
    let region = Region::boxed(ChartKind::Bar, Rect::new(10, 5, 30, 25)).with_label("B1");
    let out = refiner.refine(&chart(), &region, &[Point::new(20, 15), Point::new(12, 7)]).unwrap();
    assert_eq!(out.score, 0.93);
    let Geometry::MaskRle(m) = &out.geometry else { panic!("expected mask") };
    assert_eq!(m.count_ones(), 18 * 18);

    let req = &s.requests()[0];
    assert_eq!((req.method.as_str(), req.path.as_str()), ("POST", "/refine"));
    let body = req.json();
    assert_eq!(body["points"], serde_json::json!([[20, 15], [12, 7]]));
    let png = base64::Engine::decode(&base64::engine::general_purpose::STANDARD, body["image_png_b64"].as_str().unwrap()).unwrap();
    assert_eq!(ChartImage::decode_png("x", &png).unwrap().dims(), dims);

    let r = refine_region(&chart(), &region, &RefineConfig::default(), &refiner);
    assert!(r.refined);
    assert_eq!(r.region.label.as_deref(), Some("B1"));
    assert_eq!(r.region.bbox(), Some(Rect::new(11, 6, 29, 24)));
}

#[test]
fn mask_with_wrong_dims_is_rejected() {
    let s = StubServer::start(|_, _| Reply::json(200, mask_reply(Rect::new(0, 0, 5, 5), Dims::new(20, 20), 0.9)));
    let refiner = RemoteRefiner::new(client(&s, 2000));
    let region = Region::boxed(ChartKind::Bar, Rect::new(10, 5, 30, 25));
    assert!(matches!(refiner.refine(&chart(), &region, &[Point::new(20, 15)]), Err(RefineError::InvalidMask(_))));
    let r = refine_region(&chart(), &region, &RefineConfig::default(), &refiner);
    assert!(!r.refined && r.warning.is_some());
    assert_eq!(r.region, region);
}

#[test]
fn out_of_range_score_is_rejected() {
    let dims = Dims::new(40, 30);
    let s = StubServer::start(move |_, _| Reply::json(200, mask_reply(Rect::new(10, 5, 30, 25), dims, 1.5)));
    let region = Region::boxed(ChartKind::Bar, Rect::new(10, 5, 30, 25));
    assert!(matches!(RemoteRefiner::new(client(&s, 2000)).refine(&chart(), &region, &[]), Err(RefineError::InvalidMask(_))));
}

#[test]
fn server_error_is_retried_once() {
    let dims = Dims::new(40, 30);
    let s = StubServer::start(move |i, _| if i == 0 { Reply::json(503, "busy") } else { Reply::json(200, mask_reply(Rect::new(10, 5, 30, 25), dims, 0.8)) });
    let region = Region::boxed(ChartKind::Bar, Rect::new(10, 5, 30, 25));
    RemoteRefiner::new(client(&s, 2000)).refine(&chart(), &region, &[Point::new(20, 15)]).unwrap();
    assert_eq!(s.requests().len(), 2);
}

#[test]
fn client_error_body_is_surfaced_without_retry() {
    let s = StubServer::start(|_, _| Reply::json(422, r#"{"detail": "points must lie inside the image"}"#));
    let region = Region::boxed(ChartKind::Bar, Rect::new(10, 5, 30, 25));
    let err = RemoteRefiner::new(client(&s, 2000)).refine(&chart(), &region, &[]).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("422") && msg.contains("points must lie inside the image"), "{msg}");
    assert_eq!(s.requests().len(), 1);
}

#[test]
fn timeouts_fail_after_one_retry() {
    let s = StubServer::start(|_, _| Reply::json(200, "{}").delayed(Duration::from_millis(600)));
    let region = Region::boxed(ChartKind::Bar, Rect::new(10, 5, 30, 25));
    let err = RemoteRefiner::new(client(&s, 150)).refine(&chart(), &region, &[]).unwrap_err();
    assert!(matches!(err, RefineError::Unavailable(_)), "{err}");
    assert_eq!(s.requests().len(), 2);
}

const CROSSING: &str = include_str!("../fixtures/extract_lines_crossing.json");

#[test]
fn recorded_crossing_lines_become_ordered_traces() {
    let s = StubServer::start(|_, r| {
        assert_eq!(r.path, "/extract-lines");
        assert!(r.json()["image_png_b64"].is_string());
        Reply::json(200, CROSSING)
    });
    let img = ChartImage::filled("x", 400, 300, [255, 255, 255]).unwrap();
    let ex = RemoteLineExtractor::new(client(&s, 2000));
    let traces = ex.extract(&img).unwrap();
    assert_eq!(traces.len(), 2);
    // the falling line has the smaller mean y and is numbered first
    assert_eq!(traces[0].series_id, 1);
    assert_eq!(traces[0].points[0], Point::new(40, 250));
    // 40.5 rounds half away from zero
    assert_eq!(traces[1].points[0], Point::new(41, 70));
    assert!(traces[0].mean_y() < traces[1].mean_y());

    let marks = detect_lines(&img, &LineMarkConfig::default(), &ex).unwrap();
    assert_eq!(marks.len(), 20);
    assert_eq!(marks.marks()[0].label(), "L1-1");
    assert_eq!(marks.marks()[19].label(), "L2-10");
}

#[test]
fn extractor_failure_is_an_error() {
    let s = StubServer::start(|_, _| Reply::json(500, "model crashed"));
    let img = ChartImage::filled("x", 40, 30, [255, 255, 255]).unwrap();
    let err = RemoteLineExtractor::new(client(&s, 2000)).extract(&img).unwrap_err();
    assert!(err.to_string().contains("model crashed"));
    assert_eq!(s.requests().len(), 2);
}
