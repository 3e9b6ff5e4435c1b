//! Physical ground truth: entities, kinematics, obstacles, true time, and
//! the deterministic event queue that drives a run.
//!
//! A single global true-time clock owns event ordering; per-node clocks are
//! views over it, so synchronization error stays measurable against ground
//! truth. Events pop in `(due, seq)` order with the insertion sequence
//! number as tie-break.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a simulated entity, unique within a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Kind of simulated entity.
///
/// `RadarObject` and `NonCoopEmitter` have no communication capability;
/// `Mec` and `BaseStation` never move. `Rsu` is fixed infrastructure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Vehicle,
    Drone,
    Rsu,
    Mec,
    BaseStation,
    NonCoopEmitter,
    RadarObject,
}

impl NodeKind {
    pub fn is_mobile(self) -> bool {
        !matches!(self, NodeKind::Rsu | NodeKind::Mec | NodeKind::BaseStation)
    }

    pub fn comm_capable(self) -> bool {
        !matches!(self, NodeKind::RadarObject | NodeKind::NonCoopEmitter)
    }

    /// Kinds that may carry a radar sensor. Passive reflectors, foreign
    /// emitters and pure compute nodes never sense.
    pub fn sensing_capable(self) -> bool {
        matches!(
            self,
            NodeKind::Vehicle | NodeKind::Drone | NodeKind::Rsu | NodeKind::BaseStation
        )
    }
}

/// Synchronization precision class achieved by a node clock.
///
/// Class 1 suffices for time-stamping of data, class 2 for MAC frame
/// alignment, class 3 for TX-RX clock synchronization tight enough to
/// support time-difference-of-arrival processing.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "snake_case")]
pub enum SyncClass {
    #[default]
    Unsynced,
    TimeStamping,
    FrameSync,
    ClockSync,
}

impl SyncClass {
    pub fn as_u8(self) -> u8 {
        match self {
            SyncClass::Unsynced => 0,
            SyncClass::TimeStamping => 1,
            SyncClass::FrameSync => 2,
            SyncClass::ClockSync => 3,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(SyncClass::Unsynced),
            1 => Some(SyncClass::TimeStamping),
            2 => Some(SyncClass::FrameSync),
            3 => Some(SyncClass::ClockSync),
            _ => None,
        }
    }

    /// Residual clock error guaranteed immediately after an exchange of this
    /// class, seconds. `Unsynced` gives no guarantee.
    pub fn residual_bound_s(self) -> Option<f64> {
        match self {
            SyncClass::Unsynced => None,
            SyncClass::TimeStamping => Some(1e-3),
            SyncClass::FrameSync => Some(1e-6),
            SyncClass::ClockSync => Some(10e-9),
        }
    }
}

/// Cooperation level of a sensing group, from full separation of
/// communication and sensing (CL1) up to reuse of communication signals,
/// hardware and infrastructure for sensing (CL4).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "snake_case")]
pub enum CoopLevel {
    #[default]
    Cl1,
    Cl2,
    Cl3,
    Cl4,
}

impl CoopLevel {
    pub fn as_u8(self) -> u8 {
        match self {
            CoopLevel::Cl1 => 1,
            CoopLevel::Cl2 => 2,
            CoopLevel::Cl3 => 3,
            CoopLevel::Cl4 => 4,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            1 => Some(CoopLevel::Cl1),
            2 => Some(CoopLevel::Cl2),
            3 => Some(CoopLevel::Cl3),
            4 => Some(CoopLevel::Cl4),
            _ => None,
        }
    }
}

impl fmt::Display for CoopLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CL{}", self.as_u8())
    }
}

/// Position, velocity and heading of an entity in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    /// Meters in the world frame.
    pub position: Vector3<f64>,
    /// Meters per second.
    pub velocity: Vector3<f64>,
    /// Heading around +z, radians.
    pub yaw: f64,
}

impl Pose {
    pub fn stationary(position: Vector3<f64>, yaw: f64) -> Self {
        Pose {
            position,
            velocity: Vector3::zeros(),
            yaw,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.velocity.iter().all(|v| v.is_finite())
            && self.yaw.is_finite()
    }
}

/// Per-node clock model: a view over global true time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockState {
    /// Offset from true time at the last synchronization, seconds.
    pub offset_s: f64,
    /// Frequency error, parts per million.
    pub drift_ppm: f64,
    /// True time of the last synchronization, seconds.
    pub last_sync_s: f64,
    /// Precision class achieved by the last exchange.
    pub achieved_class: SyncClass,
}

impl Default for ClockState {
    fn default() -> Self {
        ClockState {
            offset_s: 0.0,
            drift_ppm: 0.0,
            last_sync_s: 0.0,
            achieved_class: SyncClass::Unsynced,
        }
    }
}

impl ClockState {
    /// Local clock reading at global true time `true_time_s`.
    ///
    /// `local = t + offset + drift * 1e-6 * (t - last_sync)`.
    pub fn read(&self, true_time_s: f64) -> f64 {
        debug_assert!(true_time_s >= self.last_sync_s);
        true_time_s + self.offset_s + self.drift_ppm * 1e-6 * (true_time_s - self.last_sync_s)
    }

    /// Signed clock error against ground truth at `true_time_s`.
    pub fn error_at(&self, true_time_s: f64) -> f64 {
        self.read(true_time_s) - true_time_s
    }
}

/// Axis-aligned box blocking line of sight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Obstacle {
    pub fn new(min: Vector3<f64>, max: Vector3<f64>) -> Self {
        debug_assert!(min.x <= max.x && min.y <= max.y && min.z <= max.z);
        Obstacle { min, max }
    }

    /// True when `p` lies strictly inside the box.
    pub fn contains_open(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] > self.min[i] && p[i] < self.max[i])
    }

    /// True when the open segment `a -> b` crosses the box interior.
    /// Endpoints or tangents on a face count as clear.
    pub fn blocks_segment(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
        let d = b - a;
        let mut t_enter = f64::NEG_INFINITY;
        let mut t_exit = f64::INFINITY;
        for i in 0..3 {
            if d[i] == 0.0 {
                // Parallel to this slab: on-face counts as outside the interior.
                if a[i] <= self.min[i] || a[i] >= self.max[i] {
                    return false;
                }
            } else {
                let t0 = (self.min[i] - a[i]) / d[i];
                let t1 = (self.max[i] - a[i]) / d[i];
                let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
                t_enter = t_enter.max(lo);
                t_exit = t_exit.min(hi);
            }
        }
        t_enter < t_exit && t_enter < 1.0 && t_exit > 0.0
    }
}

/// One piecewise-constant-velocity segment of a scripted trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySegment {
    /// Segment is active while true time < `until_s`.
    pub until_s: f64,
    pub velocity: Vector3<f64>,
}

/// Scripted piecewise-constant-velocity motion. After the last segment the
/// node stops.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub segments: Vec<TrajectorySegment>,
}

impl Trajectory {
    pub fn constant(velocity: Vector3<f64>) -> Self {
        Trajectory {
            segments: vec![TrajectorySegment {
                until_s: f64::INFINITY,
                velocity,
            }],
        }
    }

    pub fn velocity_at(&self, t: f64) -> Vector3<f64> {
        for seg in &self.segments {
            if t < seg.until_s {
                return seg.velocity;
            }
        }
        Vector3::zeros()
    }

    /// Next segment boundary strictly after `t`, if any.
    fn next_boundary_after(&self, t: f64) -> Option<f64> {
        self.segments
            .iter()
            .map(|s| s.until_s)
            .find(|&u| u > t && u.is_finite())
    }
}

/// A simulated entity with its physical state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub pose: Pose,
    pub clock: ClockState,
    pub trajectory: Trajectory,
}

impl Node {
    pub fn new(id: NodeId, kind: NodeKind, pose: Pose) -> Self {
        Node {
            id,
            kind,
            pose,
            clock: ClockState::default(),
            trajectory: Trajectory::default(),
        }
    }
}

/// Ground truth of a running scenario.
#[derive(Debug, Clone, Default)]
pub struct World {
    pub time_s: f64,
    nodes: BTreeMap<NodeId, Node>,
    pub obstacles: Vec<Obstacle>,
}

impl World {
    pub fn new() -> Self {
        World::default()
    }

    pub fn insert_node(&mut self, node: Node) {
        debug_assert!(
            !self.nodes.contains_key(&node.id),
            "duplicate node id {}",
            node.id
        );
        self.nodes.insert(node.id, node);
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut Node> {
        self.nodes.get_mut(&id)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Advance kinematics by `dt` seconds. Mobile nodes integrate their
    /// scripted piecewise-constant velocity exactly across segment
    /// boundaries; immobile kinds stay put.
    pub fn advance(&mut self, dt: f64) {
        debug_assert!(dt > 0.0, "advance requires dt > 0");
        let start = self.time_s;
        for node in self.nodes.values_mut() {
            if !node.kind.is_mobile() {
                node.pose.velocity = Vector3::zeros();
                continue;
            }
            let mut t = start;
            let end = start + dt;
            while t < end {
                let v = node.trajectory.velocity_at(t);
                let step_end = node
                    .trajectory
                    .next_boundary_after(t)
                    .map_or(end, |b| b.min(end));
                node.pose.position += v * (step_end - t);
                t = step_end;
            }
            node.pose.velocity = node.trajectory.velocity_at(end);
        }
        self.time_s = start + dt;
    }

    /// True when no obstacle interior intersects the segment `a -> b`.
    /// Endpoints on a box face count as clear.
    pub fn line_of_sight(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
        debug_assert!(a != b, "line_of_sight requires distinct endpoints");
        !self.obstacles.iter().any(|o| o.blocks_segment(a, b))
    }
}

/// A scheduled simulation event.
#[derive(Debug, Clone, PartialEq)]
pub struct Event<K> {
    /// True-time due instant, seconds.
    pub due_s: f64,
    /// Insertion sequence number, the deterministic tie-break.
    pub seq: u64,
    pub kind: K,
}

struct HeapEntry<K>(Event<K>);

impl<K> PartialEq for HeapEntry<K> {
    fn eq(&self, other: &Self) -> bool {
        self.0.due_s == other.0.due_s && self.0.seq == other.0.seq
    }
}
impl<K> Eq for HeapEntry<K> {}

impl<K> Ord for HeapEntry<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we pop smallest (due, seq).
        other
            .0
            .due_s
            .total_cmp(&self.0.due_s)
            .then(other.0.seq.cmp(&self.0.seq))
    }
}
impl<K> PartialOrd for HeapEntry<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Deterministic event queue ordered by `(due, seq)`.
pub struct EventQueue<K> {
    heap: BinaryHeap<HeapEntry<K>>,
    next_seq: u64,
}

impl<K> Default for EventQueue<K> {
    fn default() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_seq: 0,
        }
    }
}

impl<K> EventQueue<K> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Schedule `kind` at true time `due_s`; returns the assigned sequence
    /// number. Sequence numbers are strictly increasing at insertion.
    pub fn schedule(&mut self, due_s: f64, kind: K) -> u64 {
        debug_assert!(due_s.is_finite());
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(HeapEntry(Event {
            due_s,
            seq,
            kind,
        }));
        seq
    }

    /// Pop the earliest event with `due <= until`, if any.
    pub fn pop_due(&mut self, until: f64) -> Option<Event<K>> {
        if self.heap.peek().is_some_and(|e| e.0.due_s <= until) {
            self.heap.pop().map(|e| e.0)
        } else {
            None
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

/// Failure raised by an event handler, aborting the run.
#[derive(Debug, Error)]
#[error("event handler failed at t={time_s:.9}s seq={seq} ({kind}): {message}")]
pub struct HandlerError {
    pub time_s: f64,
    pub seq: u64,
    pub kind: String,
    pub message: String,
}

impl World {
    /// Pop and dispatch every event with `due <= until` in `(due, seq)`
    /// order, advancing kinematics to each due instant first. Returns the
    /// dispatched events in dispatch order; afterwards world time equals
    /// `until`. A handler failure aborts with a diagnostic naming the event.
    pub fn run_events<K, F>(
        &mut self,
        queue: &mut EventQueue<K>,
        until: f64,
        mut handler: F,
    ) -> Result<Vec<Event<K>>, HandlerError>
    where
        K: Clone + fmt::Debug,
        F: FnMut(&mut World, &mut EventQueue<K>, &Event<K>) -> Result<(), String>,
    {
        debug_assert!(until >= self.time_s, "run_events cannot rewind time");
        let mut dispatched = Vec::new();
        while let Some(event) = queue.pop_due(until) {
            if event.due_s > self.time_s {
                self.advance(event.due_s - self.time_s);
            }
            handler(self, queue, &event).map_err(|message| HandlerError {
                time_s: event.due_s,
                seq: event.seq,
                kind: format!("{:?}", event.kind),
                message,
            })?;
            dispatched.push(event);
        }
        if until > self.time_s {
            self.advance(until - self.time_s);
        }
        self.time_s = until;
        Ok(dispatched)
    }
}
