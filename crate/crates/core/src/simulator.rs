//! Synthetic swarm scenarios with known ground truth.
//!
//! Agents follow a heading random walk and reflect off the arena walls.
//! Detections are the true boxes plus Gaussian jitter, each dropped
//! independently with probability `dropout_p`, and shuffled within the
//! frame. Every detection carries a mask of the agent's elliptical body as
//! seen through the detection box.
//!
//! A crossing event forces two agents through the arena centre at the same
//! frame: each keeps walking randomly for as long as it can still reach the
//! waypoint in time, then heads straight for it.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detection::{Detection, EntityImage, MaskRef, MaskStore};
use crate::geometry::{iou, BBox};
use crate::masks::{raster_dims, BinaryMask};
use crate::trajectory::{Frame, TrackId, TrajectoryPoint, TrajectorySet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("{0}")]
    Invalid(String),
    #[error("crossing event {index} uses agent {agent} twice or out of range")]
    BadCrossingAgents { index: usize, agent: usize },
    #[error("agent {agent} cannot reach the crossing waypoint by frame {frame}")]
    Unreachable { agent: usize, frame: Frame },
}

/// Two agents forced through the shared waypoint at `frame`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossingEvent {
    pub agent_a: usize,
    pub agent_b: usize,
    pub frame: Frame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_agents: usize,
    pub n_frames: u32,
    pub arena: BBox,
    pub body_w: f64,
    pub body_h: f64,
    /// Pixels per frame.
    pub speed: f64,
    /// Standard deviation of the per-frame heading change, radians.
    pub turn_sigma: f64,
    pub dropout_p: f64,
    /// Standard deviation of the per-coordinate detection noise, pixels.
    pub jitter_sigma: f64,
    pub crossing_script: Vec<CrossingEvent>,
    pub seed: u64,
    /// Minor-to-major axis ratio of the body ellipse. The major axis follows
    /// the dominant direction of travel; 1.0 gives the ellipse inscribed in
    /// the box whatever the heading.
    pub body_minor_ratio: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_agents: 10,
            n_frames: 300,
            arena: BBox::new(0.0, 0.0, 640.0, 480.0).expect("valid arena"),
            body_w: 20.0,
            body_h: 20.0,
            speed: 3.0,
            turn_sigma: 0.2,
            dropout_p: 0.0,
            jitter_sigma: 0.0,
            crossing_script: Vec::new(),
            seed: 0,
            body_minor_ratio: 1.0,
        }
    }
}

impl ScenarioConfig {
    /// Scenario whose pooled adjacent-frame box IoU sits close to 0.6, the
    /// level typically seen between consecutive frames of schooling fish.
    pub fn moderate_overlap() -> Self {
        ScenarioConfig {
            speed: 4.0,
            ..ScenarioConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |msg: String| Err(ScenarioError::Invalid(msg));
        if self.n_frames == 0 {
            return invalid("n_frames must be positive".into());
        }
        if !(self.body_w > 0.0 && self.body_h > 0.0 && self.body_w.is_finite() && self.body_h.is_finite()) {
            return invalid(format!("body must be positive, got {}x{}", self.body_w, self.body_h));
        }
        if self.body_w > self.arena.w() || self.body_h > self.arena.h() {
            return invalid("body does not fit inside the arena".into());
        }
        if !(self.speed.is_finite() && self.speed >= 0.0) {
            return invalid(format!("speed must be >= 0, got {}", self.speed));
        }
        if !(self.turn_sigma.is_finite() && self.turn_sigma >= 0.0) {
            return invalid(format!("turn_sigma must be >= 0, got {}", self.turn_sigma));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return invalid(format!("dropout_p must lie in [0, 1), got {}", self.dropout_p));
        }
        if !(self.jitter_sigma.is_finite() && self.jitter_sigma >= 0.0) {
            return invalid(format!("jitter_sigma must be >= 0, got {}", self.jitter_sigma));
        }
        if !(self.body_minor_ratio > 0.0 && self.body_minor_ratio <= 1.0) {
            return invalid(format!(
                "body_minor_ratio must lie in (0, 1], got {}",
                self.body_minor_ratio
            ));
        }
        let mut seen: BTreeSet<(usize, Frame)> = BTreeSet::new();
        for (index, e) in self.crossing_script.iter().enumerate() {
            for agent in [e.agent_a, e.agent_b] {
                if agent >= self.n_agents || e.agent_a == e.agent_b || !seen.insert((agent, e.frame)) {
                    return Err(ScenarioError::BadCrossingAgents { index, agent });
                }
            }
            if e.frame < 1 || e.frame > self.n_frames {
                return invalid(format!("crossing event {index} at frame {} is outside the scenario", e.frame));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dropout {
    pub frame: Frame,
    pub agent: TrackId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub gt: TrajectorySet,
    /// Frames `1..=n_frames`, each with its (possibly empty) detection list.
    pub detections: BTreeMap<Frame, Vec<Detection>>,
    pub masks: MaskStore,
    pub dropouts: Vec<Dropout>,
    /// Ground-truth id behind every detection, parallel to `detections`.
    pub sources: BTreeMap<Frame, Vec<TrackId>>,
}

impl Scenario {
    pub fn detection_count(&self) -> usize {
        self.detections.values().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct Agent {
    cx: f64,
    cy: f64,
    heading: f64,
}

impl Agent {
    /// Body elongated along x when travel is mostly horizontal.
    fn horizontal(&self) -> bool {
        self.heading.cos().abs() >= self.heading.sin().abs()
    }
}

pub fn generate(config: &ScenarioConfig) -> Result<Scenario, ScenarioError> {
    config.validate()?;
    let mut motion_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut detect_rng = ChaCha8Rng::seed_from_u64(config.seed);
    detect_rng.set_stream(1);

    let arena = config.arena;
    let (hw, hh) = (config.body_w / 2.0, config.body_h / 2.0);
    let x_range = (arena.x() + hw, arena.right() - hw);
    let y_range = (arena.y() + hh, arena.bottom() - hh);
    let waypoint = arena.center();

    let mut agents: Vec<Agent> = (0..config.n_agents)
        .map(|_| Agent {
            cx: uniform(&mut motion_rng, x_range),
            cy: uniform(&mut motion_rng, y_range),
            heading: motion_rng.random_range(0.0..2.0 * PI),
        })
        .collect();

    let mut events: Vec<Vec<Frame>> = vec![Vec::new(); config.n_agents];
    for e in &config.crossing_script {
        events[e.agent_a].push(e.frame);
        events[e.agent_b].push(e.frame);
    }
    for (agent, frames) in events.iter_mut().enumerate() {
        frames.sort_unstable();
        if let Some(&first) = frames.first() {
            let d = dist((agents[agent].cx, agents[agent].cy), waypoint);
            if d > config.speed * f64::from(first - 1) + 1e-9 {
                return Err(ScenarioError::Unreachable { agent, frame: first });
            }
        }
    }

    let mut scenario = Scenario {
        gt: TrajectorySet::new(),
        detections: BTreeMap::new(),
        masks: MaskStore::new(),
        dropouts: Vec::new(),
        sources: BTreeMap::new(),
    };

    for frame in 1..=config.n_frames {
        if frame > 1 {
            for (i, agent) in agents.iter_mut().enumerate() {
                let turn: f64 = motion_rng.sample(StandardNormal);
                let target = events[i].iter().copied().find(|&f| f >= frame);
                step_agent(agent, turn, config, x_range, y_range, target.map(|f| (f, waypoint)), frame);
            }
        }

        let mut frame_dets = Vec::with_capacity(agents.len());
        for (i, agent) in agents.iter().enumerate() {
            let id = TrackId(i as u32 + 1);
            let gt_box = BBox::from_center(agent.cx, agent.cy, config.body_w, config.body_h)
                .expect("body dimensions validated");
            scenario
                .gt
                .insert(id, frame, TrajectoryPoint::observed(gt_box, 1.0));

            let drop_draw: f64 = detect_rng.random();
            let noise: [f64; 4] = std::array::from_fn(|_| detect_rng.sample(StandardNormal));
            if drop_draw < config.dropout_p {
                scenario.dropouts.push(Dropout { frame, agent: id });
                continue;
            }
            // quantized to the precision of the detection file format, so
            // reading the written files back reproduces the mask rasters
            let s = config.jitter_sigma;
            let det_box = BBox::new(
                quantize(gt_box.x() + s * noise[0]),
                quantize(gt_box.y() + s * noise[1]),
                quantize((gt_box.w() + s * noise[2]).max(1.0)),
                quantize((gt_box.h() + s * noise[3]).max(1.0)),
            )
            .expect("jittered box stays valid");
            frame_dets.push((id, det_box, *agent));
        }
        frame_dets.shuffle(&mut detect_rng);

        let mut dets = Vec::with_capacity(frame_dets.len());
        let mut sources = Vec::with_capacity(frame_dets.len());
        for (det_index, (id, det_box, agent)) in frame_dets.into_iter().enumerate() {
            let key = MaskRef { frame, det_index };
            let mask = render_body(&agent, config, &det_box);
            scenario.masks.insert(key, EntityImage::Mask(mask));
            dets.push(Detection::new(frame, det_box, 1.0).with_mask(key));
            sources.push(id);
        }
        scenario.detections.insert(frame, dets);
        scenario.sources.insert(frame, sources);
    }
    Ok(scenario)
}

fn uniform<R: Rng>(rng: &mut R, range: (f64, f64)) -> f64 {
    if range.1 > range.0 {
        rng.random_range(range.0..=range.1)
    } else {
        range.0
    }
}

fn quantize(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Advances one agent to `frame`. With a pending crossing `(at, waypoint)`,
/// the random step is kept only while the waypoint stays reachable in time.
fn step_agent(
    agent: &mut Agent,
    turn: f64,
    config: &ScenarioConfig,
    x_range: (f64, f64),
    y_range: (f64, f64),
    target: Option<(Frame, (f64, f64))>,
    frame: Frame,
) {
    let mut next = *agent;
    next.heading += config.turn_sigma * turn;
    next.cx += config.speed * next.heading.cos();
    next.cy += config.speed * next.heading.sin();
    reflect(&mut next, x_range, y_range);

    if let Some((at, waypoint)) = target {
        let remaining = f64::from(at - frame);
        if dist((next.cx, next.cy), waypoint) > config.speed * remaining + 1e-9 {
            // head straight for the waypoint, arriving exactly at `at`
            let steps = remaining + 1.0;
            let (dx, dy) = (waypoint.0 - agent.cx, waypoint.1 - agent.cy);
            next.cx = agent.cx + dx / steps;
            next.cy = agent.cy + dy / steps;
            if dx != 0.0 || dy != 0.0 {
                next.heading = dy.atan2(dx);
            } else {
                next.heading = agent.heading;
            }
        }
    }
    *agent = next;
}

fn reflect(agent: &mut Agent, x_range: (f64, f64), y_range: (f64, f64)) {
    let (lo, hi) = x_range;
    for _ in 0..8 {
        if agent.cx < lo {
            agent.cx = 2.0 * lo - agent.cx;
            agent.heading = PI - agent.heading;
        } else if agent.cx > hi {
            agent.cx = 2.0 * hi - agent.cx;
            agent.heading = PI - agent.heading;
        } else {
            break;
        }
    }
    agent.cx = agent.cx.clamp(lo, hi.max(lo));
    let (lo, hi) = y_range;
    for _ in 0..8 {
        if agent.cy < lo {
            agent.cy = 2.0 * lo - agent.cy;
            agent.heading = -agent.heading;
        } else if agent.cy > hi {
            agent.cy = 2.0 * hi - agent.cy;
            agent.heading = -agent.heading;
        } else {
            break;
        }
    }
    agent.cy = agent.cy.clamp(lo, hi.max(lo));
    agent.heading = agent.heading.rem_euclid(2.0 * PI);
}

/// The agent's elliptical body rasterized over the detection box. Pixel
/// `(r, c)` is set when its cell centre lies inside the ellipse.
fn render_body(agent: &Agent, config: &ScenarioConfig, det_box: &BBox) -> BinaryMask {
    let (width, height) = raster_dims(det_box);
    let ox = det_box.x().floor();
    let oy = det_box.y().floor();
    let (mut ax, mut ay) = (config.body_w / 2.0, config.body_h / 2.0);
    if agent.horizontal() {
        ay *= config.body_minor_ratio;
    } else {
        ax *= config.body_minor_ratio;
    }
    let mut bits = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            let px = ox + c as f64 + 0.5;
            let py = oy + r as f64 + 0.5;
            let u = (px - agent.cx) / ax;
            let v = (py - agent.cy) / ay;
            bits.push(u * u + v * v <= 1.0);
        }
    }
    BinaryMask::new(width, height, bits, *det_box).expect("raster matches its dimensions")
}

/// Adjacent-frame box IoU statistics over ground-truth trajectories.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjacentIouStats {
    /// Mean over all consecutive pairs of all tracks.
    pub mean: f64,
    /// 20 equal bins over [0, 1]; an IoU of exactly 1 lands in the last.
    pub histogram: [usize; 20],
    pub pairs: usize,
    /// Per-track mean, for tracks with at least one consecutive pair.
    pub per_track: Vec<(TrackId, f64)>,
}

pub const HISTOGRAM_BINS: usize = 20;

/// `None` when no track has two consecutive frames.
pub fn adjacent_iou_stats(gt: &TrajectorySet) -> Option<AdjacentIouStats> {
    let mut histogram = [0usize; HISTOGRAM_BINS];
    let mut total = 0.0;
    let mut pairs = 0usize;
    let mut per_track = Vec::new();
    for (id, traj) in gt.iter() {
        let points: Vec<_> = traj.iter().collect();
        let mut sum = 0.0;
        let mut n = 0usize;
        for w in points.windows(2) {
            let ((f0, p0), (f1, p1)) = (w[0], w[1]);
            if f1 != f0 + 1 {
                continue;
            }
            let v = iou(&p0.bbox, &p1.bbox);
            let bin = ((v * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
            histogram[bin] += 1;
            sum += v;
            n += 1;
        }
        if n > 0 {
            per_track.push((id, sum / n as f64));
            total += sum;
            pairs += n;
        }
    }
    (pairs > 0).then(|| AdjacentIouStats {
        mean: total / pairs as f64,
        histogram,
        pairs,
        per_track,
    })
}
