//! External model interfaces: detection, tracking, captioning and action
//! description, with blocking HTTP clients and deterministic mocks.

use std::collections::BTreeMap;
use std::thread;
use std::time::Duration;

use loomkit_core::model::{BinaryMask, FrameGeometry, Shot};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version tag sent with every request body.
pub const WIRE_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClientError {
    #[error("transport error after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("server returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("bad response: {0}")]
    BadResponse(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxRepr")]
pub struct DetectionBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub score: f64,
    pub label: String,
}

#[derive(Deserialize)]
struct BoxRepr {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
    score: f64,
    label: String,
}

impl TryFrom<BoxRepr> for DetectionBox {
    type Error = String;

    fn try_from(r: BoxRepr) -> Result<Self, Self::Error> {
        DetectionBox::new(r.x1, r.y1, r.x2, r.y2, r.score, r.label)
    }
}

impl DetectionBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64, score: f64, label: impl Into<String>) -> Result<Self, String> {
        if !(x1 < x2 && y1 < y2) {
            return Err(format!("degenerate box ({x1}, {y1}, {x2}, {y2})"));
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(format!("score {score} outside [0, 1]"));
        }
        Ok(Self {
            x1,
            y1,
            x2,
            y2,
            score,
            label: label.into(),
        })
    }

    /// The box as a mask, edges rounded to the pixel grid and clipped to the frame.
    pub fn rasterize(&self, geometry: FrameGeometry) -> BinaryMask {
        let clamp = |v: f64, hi: u32| (v.round().max(0.0) as u32).min(hi);
        BinaryMask::from_rect(
            geometry,
            clamp(self.x1, geometry.width),
            clamp(self.y1, geometry.height),
            clamp(self.x2, geometry.width),
            clamp(self.y2, geometry.height),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ImageRef {
    pub video_id: String,
    pub frame_index: usize,
}

impl ImageRef {
    pub fn new(video_id: impl Into<String>, frame_index: usize) -> Self {
        Self {
            video_id: video_id.into(),
            frame_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrackSeed {
    Box { bbox: DetectionBox },
    Mask { mask: BinaryMask },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRequest {
    pub video_ref: String,
    pub shot: Shot,
    pub seed: TrackSeed,
    pub seed_frame: usize,
    pub geometry: FrameGeometry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelClientConfig {
    pub endpoint: String,
    pub timeout_s: f64,
    pub retry_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_token: Option<String>,
}

impl ModelClientConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout_s: 30.0,
            retry_count: 2,
            auth_token: None,
        }
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        if !(self.timeout_s.is_finite() && self.timeout_s > 0.0) {
            return Err(ClientError::InvalidConfig(format!(
                "timeout_s {} must be positive",
                self.timeout_s
            )));
        }
        if self.endpoint.is_empty() {
            return Err(ClientError::InvalidConfig("empty endpoint".into()));
        }
        Ok(())
    }
}

pub trait Detector: Send + Sync {
    fn detect(&self, image: &ImageRef, text_query: &str) -> Result<Vec<DetectionBox>, ClientError>;
}

pub trait Tracker: Send + Sync {
    fn track(&self, request: &TrackRequest) -> Result<BTreeMap<usize, BinaryMask>, ClientError>;
}

pub trait Captioner: Send + Sync {
    fn caption(&self, image: &ImageRef, bbox: &DetectionBox) -> Result<String, ClientError>;
}

/// Produces raw "frames A-B: text" output for an action prompt.
pub trait DescriptionModel: Send + Sync {
    fn describe(&self, video_id: &str, shot_index: usize, prompt: &str, num_frames: u32)
        -> Result<String, ClientError>;
}

/// Blocking JSON-over-HTTP transport with retries on transport errors and 5xx.
pub struct HttpTransport {
    config: ModelClientConfig,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(config: ModelClientConfig) -> Result<Self, ClientError> {
        config.validate()?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_s)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self { config, agent })
    }

    fn url(&self, path: &str) -> String {
        format!(
            "{}/{}",
            self.config.endpoint.trim_end_matches('/'),
            path.trim_start_matches('/')
        )
    }

    pub fn post<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: &B) -> Result<R, ClientError> {
        let mut payload = serde_json::to_value(body).map_err(|e| ClientError::BadResponse(e.to_string()))?;
        if let serde_json::Value::Object(map) = &mut payload {
            map.insert("version".into(), WIRE_VERSION.into());
        }
        let url = self.url(path);
        let attempts = self.config.retry_count + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(Duration::from_millis(50 << attempt.min(6)));
            }
            let mut req = self.agent.post(&url);
            if let Some(token) = &self.config.auth_token {
                req = req.header("Authorization", &format!("Bearer {token}"));
            }
            match req.send_json(&payload) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if status >= 500 {
                        last = format!("status {status}");
                        continue;
                    }
                    if status >= 400 {
                        let body = resp.body_mut().read_to_string().unwrap_or_default();
                        return Err(ClientError::Status { status, body });
                    }
                    return resp
                        .body_mut()
                        .read_json::<R>()
                        .map_err(|e| ClientError::BadResponse(e.to_string()));
                }
                Err(e) => last = e.to_string(),
            }
        }
        Err(ClientError::Transport {
            attempts,
            message: last,
        })
    }
}

#[derive(Serialize)]
struct DetectBody<'a> {
    image_ref: &'a ImageRef,
    text_query: &'a str,
}

#[derive(Serialize)]
struct CaptionBody<'a> {
    image_ref: &'a ImageRef,
    #[serde(rename = "box")]
    bbox: &'a DetectionBox,
}

#[derive(Deserialize)]
struct CaptionReply {
    text: String,
}

#[derive(Serialize)]
struct DescribeBody<'a> {
    video_id: &'a str,
    shot_index: usize,
    prompt: &'a str,
    num_frames: u32,
}

pub struct HttpDetector(pub HttpTransport);
pub struct HttpTracker(pub HttpTransport);
pub struct HttpCaptioner(pub HttpTransport);
pub struct HttpDescriptionModel(pub HttpTransport);

impl Detector for HttpDetector {
    fn detect(&self, image: &ImageRef, text_query: &str) -> Result<Vec<DetectionBox>, ClientError> {
        self.0.post(
            "detect",
            &DetectBody {
                image_ref: image,
                text_query,
            },
        )
    }
}

impl Tracker for HttpTracker {
    fn track(&self, request: &TrackRequest) -> Result<BTreeMap<usize, BinaryMask>, ClientError> {
        let raw: BTreeMap<String, BinaryMask> = self.0.post("track", request)?;
        raw.into_iter()
            .map(|(k, v)| {
                k.parse::<usize>()
                    .map(|f| (f, v))
                    .map_err(|_| ClientError::BadResponse(format!("frame key {k:?}")))
            })
            .collect()
    }
}

impl Captioner for HttpCaptioner {
    fn caption(&self, image: &ImageRef, bbox: &DetectionBox) -> Result<String, ClientError> {
        let reply: CaptionReply = self.0.post("caption", &CaptionBody { image_ref: image, bbox })?;
        Ok(reply.text)
    }
}

impl DescriptionModel for HttpDescriptionModel {
    fn describe(
        &self,
        video_id: &str,
        shot_index: usize,
        prompt: &str,
        num_frames: u32,
    ) -> Result<String, ClientError> {
        let reply: CaptionReply = self.0.post(
            "describe",
            &DescribeBody {
                video_id,
                shot_index,
                prompt,
                num_frames,
            },
        )?;
        Ok(reply.text)
    }
}

/// Returns boxes from a fixture table keyed by image. Unlisted images either
/// get nothing or, when a seed is set, one generated person box.
#[derive(Debug, Clone, Default)]
pub struct MockDetector {
    pub table: BTreeMap<ImageRef, Vec<DetectionBox>>,
    pub generate: Option<(u64, FrameGeometry)>,
}

impl MockDetector {
    pub fn with_table(table: BTreeMap<ImageRef, Vec<DetectionBox>>) -> Self {
        Self { table, generate: None }
    }

    pub fn generated(seed: u64, geometry: FrameGeometry) -> Self {
        Self {
            table: BTreeMap::new(),
            generate: Some((seed, geometry)),
        }
    }
}

fn image_seed(seed: u64, image: &ImageRef) -> u64 {
    // FNV-1a over the id, mixed with the frame
    let mut h: u64 = 0xcbf29ce484222325;
    for b in image.video_id.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x100000001b3);
    }
    h ^ seed ^ (image.frame_index as u64).wrapping_mul(0x9e3779b97f4a7c15)
}

impl Detector for MockDetector {
    fn detect(&self, image: &ImageRef, _text_query: &str) -> Result<Vec<DetectionBox>, ClientError> {
        if let Some(found) = self.table.get(image) {
            return Ok(found.clone());
        }
        let Some((seed, g)) = self.generate else {
            return Ok(Vec::new());
        };
        let mut rng = ChaCha8Rng::seed_from_u64(image_seed(seed, image));
        let (w, h) = (g.width as f64, g.height as f64);
        let x1 = rng.random_range(0.0..w * 0.5);
        let y1 = rng.random_range(0.0..h * 0.5);
        let x2 = (x1 + rng.random_range(w * 0.2..w * 0.5)).min(w);
        let y2 = (y1 + rng.random_range(h * 0.2..h * 0.5)).min(h);
        let score = rng.random_range(0.5..1.0);
        let bbox = DetectionBox::new(x1, y1, x2, y2, score, "person").map_err(ClientError::BadResponse)?;
        Ok(vec![bbox])
    }
}

/// Paints the seed on every frame of the requested shot.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockTracker;

impl Tracker for MockTracker {
    fn track(&self, request: &TrackRequest) -> Result<BTreeMap<usize, BinaryMask>, ClientError> {
        let mask = match &request.seed {
            TrackSeed::Box { bbox } => bbox.rasterize(request.geometry),
            TrackSeed::Mask { mask } => mask.clone(),
        };
        Ok(request.shot.frames().map(|f| (f, mask.clone())).collect())
    }
}

#[derive(Debug, Clone, Default)]
pub struct MockCaptioner {
    pub captions: BTreeMap<String, String>,
}

impl Captioner for MockCaptioner {
    fn caption(&self, image: &ImageRef, _bbox: &DetectionBox) -> Result<String, ClientError> {
        Ok(self
            .captions
            .get(&image.video_id)
            .cloned()
            .unwrap_or_else(|| "a person in dark clothing".to_string()))
    }
}

/// Emits a covering set of ranges with seeded lengths and phrases.
#[derive(Debug, Clone, Copy)]
pub struct MockDescriptionModel {
    pub seed: u64,
}

const MOCK_ACTIONS: [&str; 6] = [
    "walks forward slowly",
    "turns to look over the shoulder",
    "raises one hand and waves",
    "stands still and talks",
    "sits down on a chair",
    "picks up an object from the table",
];

impl DescriptionModel for MockDescriptionModel {
    fn describe(
        &self,
        video_id: &str,
        shot_index: usize,
        _prompt: &str,
        num_frames: u32,
    ) -> Result<String, ClientError> {
        let image = ImageRef::new(video_id, shot_index);
        let mut rng = ChaCha8Rng::seed_from_u64(image_seed(self.seed, &image));
        let mut out = String::new();
        let mut start = 1;
        while start <= num_frames {
            let end = (start + rng.random_range(0..6)).min(num_frames);
            let action = MOCK_ACTIONS[rng.random_range(0..MOCK_ACTIONS.len())];
            out.push_str(&format!("frames {start}-{end}: The person {action}.\n"));
            start = end + 1;
        }
        Ok(out)
    }
}
