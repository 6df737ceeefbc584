//! Spectrum sharing: RSS mode selection, pattern assignment, bandwidth
//! partition, idle detection, and friendly-jammer selection.
//!
//! A fraction eta of the total bandwidth is split orthogonally and equally
//! among cellular UEs, the rest among overlay D2D pairs. Underlay D2D UEs
//! reuse a host subchannel: only cellular hosts under the traditional
//! strategy; cellular hosts with probability eta, overlay hosts otherwise,
//! under the new strategy. Idle D2D UEs are the friendly-jammer pool of the
//! new strategy.

use crate::channel::{classify_link, mean_rss, ChannelRealization};
use crate::config::{BetaInterpretation, SimConfig, Strategy};
use crate::deployment::{prop_distance, Deployment, Node, NodeId, SpatialIndex};
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Communication mode of a transmitting UE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Cellular,
    D2d,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Cellular => "cellular",
            Mode::D2d => "d2d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SubchannelClass {
    Cellular,
    Overlay,
}

/// A subchannel is identified by its owning UE: each cellular UE owns one
/// cellular subchannel, each overlay D2D transmitter one overlay subchannel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Subchannel {
    pub class: SubchannelClass,
    pub owner: NodeId,
}

impl Subchannel {
    pub fn cellular(owner: NodeId) -> Self {
        Subchannel {
            class: SubchannelClass::Cellular,
            owner,
        }
    }

    pub fn overlay(owner: NodeId) -> Self {
        Subchannel {
            class: SubchannelClass::Overlay,
            owner,
        }
    }
}

impl std::fmt::Display for Subchannel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.class {
            SubchannelClass::Cellular => write!(f, "cellular:{}", self.owner),
            SubchannelClass::Overlay => write!(f, "overlay:{}", self.owner),
        }
    }
}

/// Spectrum pattern of one UE for one drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pattern {
    /// Cellular UE on its own orthogonal subchannel.
    CellularUser(Subchannel),
    /// Overlay D2D transmitter on its own orthogonal subchannel.
    OverlayD2d(Subchannel),
    /// Underlay D2D transmitter reusing a host subchannel.
    UnderlayD2d { host: Subchannel },
    /// D2D UE that failed the decode threshold (or found no host); does not
    /// transmit data and is a friendly-jammer candidate.
    Idle,
    /// Idle D2D UE activated as a friendly jammer on a target subchannel.
    /// Appears in jammer assignments, not in per-UE data patterns.
    Jammer(Subchannel),
}

impl Pattern {
    /// Subchannel this pattern transmits on, if any.
    pub fn subchannel(&self) -> Option<Subchannel> {
        match self {
            Pattern::CellularUser(s) | Pattern::OverlayD2d(s) | Pattern::Jammer(s) => Some(*s),
            Pattern::UnderlayD2d { host } => Some(*host),
            Pattern::Idle => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Pattern::CellularUser(_) => "cellular-user",
            Pattern::OverlayD2d(_) => "overlay-d2d",
            Pattern::UnderlayD2d { .. } => "underlay-d2d",
            Pattern::Idle => "idle",
            Pattern::Jammer(_) => "jammer",
        }
    }
}

/// Mode decision for one UE with the two nearest-node legs it was based on.
#[derive(Debug, Clone, Copy)]
pub struct ModeSelection {
    pub ue: NodeId,
    pub mode: Mode,
    pub nearest_bs: NodeId,
    pub nearest_peer: NodeId,
}

/// An activated friendly jammer and the subchannel it protects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JammerAssignment {
    pub ue: NodeId,
    pub target: Subchannel,
}

/// Per-UE outcome within a finished plan.
#[derive(Debug, Clone, Copy)]
pub struct UeAssignment {
    pub mode: Mode,
    pub pattern: Pattern,
    /// D2D receiver (nearest other UE) or serving BS for cellular UEs.
    pub receiver: NodeId,
    pub bandwidth_hz: f64,
}

/// Complete spectrum plan for one drop. Immutable once built; the jammer
/// set is attached after the tagged links have been evaluated.
#[derive(Debug, Clone)]
pub struct SpectrumPlan {
    pub strategy: Strategy,
    pub assignments: BTreeMap<NodeId, UeAssignment>,
    /// Active co-channel transmitters per subchannel (idle UEs excluded).
    pub cochannel: BTreeMap<Subchannel, Vec<NodeId>>,
    /// Cellular UE count (cellular UEs never idle).
    pub n_cellular: u32,
    /// Overlay D2D transmitters still active after idle detection.
    pub n_overlay: u32,
    /// Underlay D2D transmitters still active after idle detection.
    pub n_underlay: u32,
    /// Idle D2D UEs (decode failures plus unhosted underlay UEs).
    pub n_idle: u32,
    /// Subchannel counts at assignment time; bandwidth divisors.
    pub n_cellular_subchannels: u32,
    pub n_overlay_subchannels: u32,
    pub cellular_sub_bw_hz: f64,
    pub overlay_sub_bw_hz: f64,
    /// Overlay D2D transmitter closest to the region center, if any.
    pub tagged_overlay: Option<NodeId>,
    /// Cellular UE closest to the region center, if any.
    pub tagged_cellular: Option<NodeId>,
    /// Activated jammers; filled in by the tagged-link evaluation.
    pub jammers: Vec<JammerAssignment>,
    /// Underlay UEs whose drawn host class was empty and fell back.
    pub host_fallbacks: u32,
}

impl SpectrumPlan {
    /// Active transmitters sharing `sub`, excluding `tx`.
    pub fn cochannel_excluding(&self, sub: Subchannel, tx: NodeId) -> Vec<NodeId> {
        self.cochannel
            .get(&sub)
            .map(|v| v.iter().copied().filter(|&id| id != tx).collect())
            .unwrap_or_default()
    }

    /// Jammers targeting `sub`.
    pub fn jammers_on(&self, sub: Subchannel) -> Vec<NodeId> {
        self.jammers
            .iter()
            .filter(|j| j.target == sub)
            .map(|j| j.ue)
            .collect()
    }
}

/// A drop that cannot run the pipeline at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DegenerateDrop {
    #[error("no serving base station in this drop")]
    NoServingBs,
    #[error("fewer than two transmitting UEs in this drop")]
    NoPeerUes,
}

/// RSS-based mode selection for one UE: cellular iff the fading-free RSS of
/// the UE's transmission at its closest serving BS exceeds that at its
/// closest other UE. Each leg uses its own path loss exponent; ties go to
/// D2D. Standalone form; `select_modes` is the bulk path.
pub fn select_mode(
    ue: &Node,
    deployment: &Deployment,
    cfg: &SimConfig,
) -> Result<Mode, DegenerateDrop> {
    let sel = select_modes(deployment, cfg)?;
    sel.iter()
        .find(|m| m.ue == ue.id)
        .map(|m| m.mode)
        .ok_or(DegenerateDrop::NoPeerUes)
}

/// Mode selection for every transmitting UE, sharing the spatial indices.
pub fn select_modes(
    deployment: &Deployment,
    cfg: &SimConfig,
) -> Result<Vec<ModeSelection>, DegenerateDrop> {
    let bs_ids = deployment.serving_bs_ids();
    if bs_ids.is_empty() {
        return Err(DegenerateDrop::NoServingBs);
    }
    let ue_ids = deployment.transmitting_ue_ids();
    if ue_ids.len() < 2 {
        return Err(DegenerateDrop::NoPeerUes);
    }

    let bs_index = SpatialIndex::build(
        bs_ids.iter().map(|&id| (id, deployment.node(id).pos)),
        cfg.area_m2,
    );
    let ue_index = SpatialIndex::build(
        ue_ids.iter().map(|&id| (id, deployment.node(id).pos)),
        cfg.area_m2,
    );

    let mut out = Vec::with_capacity(ue_ids.len());
    for &id in &ue_ids {
        let ue = deployment.node(id);
        let (bs, _) = bs_index
            .nearest(ue.pos, None)
            .expect("serving BS set non-empty");
        let (peer, _) = ue_index
            .nearest(ue.pos, Some(id))
            .expect("peer set non-empty");
        let p = deployment.tx_power_mw(id, cfg);
        let rss_bs = leg_mean_rss(ue, deployment.node(bs), p, cfg);
        let rss_peer = leg_mean_rss(ue, deployment.node(peer), p, cfg);
        let mode = if rss_bs > rss_peer {
            Mode::Cellular
        } else {
            Mode::D2d
        };
        out.push(ModeSelection {
            ue: id,
            mode,
            nearest_bs: bs,
            nearest_peer: peer,
        });
    }
    Ok(out)
}

fn leg_mean_rss(tx: &Node, rx: &Node, tx_power_mw: f64, cfg: &SimConfig) -> f64 {
    let class = classify_link(tx, rx, cfg);
    mean_rss(tx_power_mw, prop_distance(tx.pos, rx.pos, cfg), class.alpha)
}

/// D2D receiver of a UE: its nearest other transmitting UE. A cellular UE's
/// receiver is its nearest serving BS.
pub fn pair_d2d(ue: &Node, deployment: &Deployment, cfg: &SimConfig) -> Option<NodeId> {
    let ue_ids = deployment.transmitting_ue_ids();
    let index = SpatialIndex::build(
        ue_ids.iter().map(|&id| (id, deployment.node(id).pos)),
        cfg.area_m2,
    );
    index.nearest(ue.pos, Some(ue.id)).map(|(id, _)| id)
}

/// Pattern assignment for the D2D UEs given the cellular population.
#[derive(Debug, Clone)]
pub struct PatternAssignment {
    /// Pattern per D2D UE (never `CellularUser`).
    pub patterns: BTreeMap<NodeId, Pattern>,
    pub n_overlay: u32,
    pub n_underlay: u32,
    /// Underlay UEs idled because both host classes were empty.
    pub n_unhosted: u32,
    pub host_fallbacks: u32,
}

/// Splits D2D UEs into overlay/underlay and draws underlay hosts.
///
/// The draw sequence is identical under both strategies (unused uniforms
/// are still consumed) so paired runs stay on common random numbers.
pub fn assign_patterns(
    d2d_ues: &[NodeId],
    cellular_ues: &[NodeId],
    strategy: Strategy,
    cfg: &SimConfig,
    rng: &mut impl Rng,
) -> PatternAssignment {
    let mut underlay = Vec::new();
    let mut overlay = Vec::new();
    for &ue in d2d_ues {
        if rng.gen::<f64>() < cfg.underlay_prob {
            underlay.push(ue);
        } else {
            overlay.push(ue);
        }
    }

    let mut patterns = BTreeMap::new();
    for &ue in &overlay {
        patterns.insert(ue, Pattern::OverlayD2d(Subchannel::overlay(ue)));
    }

    let mut n_unhosted = 0u32;
    let mut host_fallbacks = 0u32;
    for &ue in &underlay {
        let u_class = rng.gen::<f64>();
        let u_idx = rng.gen::<f64>();
        let prefer_cellular = match strategy {
            Strategy::Traditional => true,
            Strategy::New => u_class < cfg.eta,
        };
        let host = pick_host(
            prefer_cellular,
            cellular_ues,
            &overlay,
            u_idx,
            &mut host_fallbacks,
        );
        match host {
            Some(h) => {
                patterns.insert(ue, Pattern::UnderlayD2d { host: h });
            }
            None => {
                n_unhosted += 1;
                patterns.insert(ue, Pattern::Idle);
            }
        }
    }

    PatternAssignment {
        patterns,
        n_overlay: overlay.len() as u32,
        n_underlay: (underlay.len() as u32) - n_unhosted,
        n_unhosted,
        host_fallbacks,
    }
}

fn pick_host(
    prefer_cellular: bool,
    cellular: &[NodeId],
    overlay: &[NodeId],
    u_idx: f64,
    fallbacks: &mut u32,
) -> Option<Subchannel> {
    let pick = |ids: &[NodeId], class: SubchannelClass| -> Subchannel {
        let i = ((u_idx * ids.len() as f64) as usize).min(ids.len() - 1);
        Subchannel {
            class,
            owner: ids[i],
        }
    };
    match (prefer_cellular, cellular.is_empty(), overlay.is_empty()) {
        (true, false, _) => Some(pick(cellular, SubchannelClass::Cellular)),
        (true, true, false) => {
            *fallbacks += 1;
            Some(pick(overlay, SubchannelClass::Overlay))
        }
        (false, _, false) => Some(pick(overlay, SubchannelClass::Overlay)),
        (false, false, true) => {
            *fallbacks += 1;
            Some(pick(cellular, SubchannelClass::Cellular))
        }
        _ => None,
    }
}

/// Equal orthogonal split: eta*W over the cellular subchannels, (1-eta)*W
/// over the overlay subchannels. Zero when the class has no subchannels.
pub fn partition_bandwidth(n_cellular: u32, n_overlay: u32, cfg: &SimConfig) -> (f64, f64) {
    let cell = if n_cellular > 0 {
        cfg.eta * cfg.bandwidth_hz / n_cellular as f64
    } else {
        0.0
    };
    let ovl = if n_overlay > 0 {
        (1.0 - cfg.eta) * cfg.bandwidth_hz / n_overlay as f64
    } else {
        0.0
    };
    (cell, ovl)
}

/// Decode threshold in the units of the configured interpretation.
fn decode_threshold(cfg: &SimConfig) -> f64 {
    match cfg.beta_interpretation {
        // 10^(beta/10) mW.
        BetaInterpretation::RssDbm => crate::channel::dbm_to_mw(cfg.beta_dbm),
        // Linear SINR corresponding to (beta - sigma^2) dB.
        BetaInterpretation::SinrDb => crate::channel::dbm_to_mw(cfg.beta_dbm - cfg.noise_dbm),
    }
}

/// Whether a D2D link decodes. Idling is strict: the link stays active when
/// its metric equals the threshold exactly.
// Written as negations of `<` so the strict-idling boundary stays visible.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn decode_active(signal_mw: f64, interference_mw: f64, cfg: &SimConfig) -> bool {
    let threshold = decode_threshold(cfg);
    match cfg.beta_interpretation {
        BetaInterpretation::RssDbm => !(signal_mw < threshold),
        BetaInterpretation::SinrDb => {
            !(crate::channel::sinr(signal_mw, interference_mw, cfg.noise_mw()) < threshold)
        }
    }
}

/// Single idle-detection pass: every D2D transmitter is taken active and no
/// jammers exist; each D2D link's decode metric decides. Returns the idle
/// set.
pub fn detect_idle(
    patterns: &BTreeMap<NodeId, Pattern>,
    receivers: &BTreeMap<NodeId, NodeId>,
    deployment: &Deployment,
    channels: &ChannelRealization,
    cfg: &SimConfig,
) -> BTreeSet<NodeId> {
    let cochannel = cochannel_transmitters(patterns);
    let mut idle = BTreeSet::new();
    for (&ue, pattern) in patterns {
        let sub = match pattern {
            Pattern::OverlayD2d(s) => *s,
            Pattern::UnderlayD2d { host } => *host,
            _ => continue, // cellular UEs never idle; already-idle UEs stay idle
        };
        let tx = deployment.node(ue);
        let rx = deployment.node(receivers[&ue]);
        let signal = channels.leg_power_mw(tx, rx, deployment.tx_power_mw(ue, cfg), cfg);
        let interference = match cfg.beta_interpretation {
            BetaInterpretation::RssDbm => 0.0,
            BetaInterpretation::SinrDb => cochannel
                .get(&sub)
                .into_iter()
                .flatten()
                .filter(|&&i| i != ue)
                .map(|&i| {
                    let it = deployment.node(i);
                    channels.leg_power_mw(it, rx, deployment.tx_power_mw(i, cfg), cfg)
                })
                .sum(),
        };
        if !decode_active(signal, interference, cfg) {
            idle.insert(ue);
        }
    }
    idle
}

/// Groups transmitters by subchannel; idle patterns contribute nothing.
pub fn cochannel_transmitters(
    patterns: &BTreeMap<NodeId, Pattern>,
) -> BTreeMap<Subchannel, Vec<NodeId>> {
    let mut map: BTreeMap<Subchannel, Vec<NodeId>> = BTreeMap::new();
    for (&ue, pattern) in patterns {
        match pattern {
            Pattern::CellularUser(s) | Pattern::OverlayD2d(s) => {
                map.entry(*s).or_default().push(ue)
            }
            Pattern::UnderlayD2d { host } => map.entry(*host).or_default().push(ue),
            Pattern::Idle | Pattern::Jammer(_) => {}
        }
    }
    map
}

/// The strong-jammer rule: a candidate qualifies iff its jamming-to-noise
/// ratio at the protected receiver is strictly below that at the
/// eavesdropper. Noise cancels, so the received powers compare directly.
pub fn strong_jammer(jam_at_rx_mw: f64, jam_at_eaves_mw: f64) -> bool {
    jam_at_rx_mw < jam_at_eaves_mw
}

/// Selects the idle D2D UEs that qualify as friendly jammers for one tagged
/// link. Evaluation is independent per tagged link; a UE may jam for both.
pub fn select_jammers(
    idle: &BTreeSet<NodeId>,
    receiver: &Node,
    eavesdropper: &Node,
    channels: &ChannelRealization,
    cfg: &SimConfig,
    deployment: &Deployment,
) -> Vec<NodeId> {
    let p_jam = cfg.jammer_tx_mw();
    idle.iter()
        .copied()
        .filter(|&j| {
            let jn = deployment.node(j);
            let at_rx = channels.leg_power_mw(jn, receiver, p_jam, cfg);
            let at_eaves = channels.leg_power_mw(jn, eavesdropper, p_jam, cfg);
            strong_jammer(at_rx, at_eaves)
        })
        .collect()
}

/// Runs mode selection through idle detection and tagging; jammers are
/// attached later by the tagged-link evaluation.
pub fn build_plan(
    deployment: &Deployment,
    channels: &ChannelRealization,
    cfg: &SimConfig,
    strategy: Strategy,
    rng: &mut impl Rng,
) -> Result<SpectrumPlan, DegenerateDrop> {
    let selections = select_modes(deployment, cfg)?;

    let mut cellular = Vec::new();
    let mut d2d = Vec::new();
    let mut receivers = BTreeMap::new();
    for s in &selections {
        match s.mode {
            Mode::Cellular => {
                cellular.push(s.ue);
                receivers.insert(s.ue, s.nearest_bs);
            }
            Mode::D2d => {
                d2d.push(s.ue);
                receivers.insert(s.ue, s.nearest_peer);
            }
        }
    }

    let assignment = assign_patterns(&d2d, &cellular, strategy, cfg, rng);

    let n_cellular_subchannels = cellular.len() as u32;
    let n_overlay_subchannels = assignment.n_overlay;
    let (cell_bw, ovl_bw) = partition_bandwidth(n_cellular_subchannels, n_overlay_subchannels, cfg);

    let mut patterns: BTreeMap<NodeId, Pattern> = assignment.patterns;
    for &ue in &cellular {
        patterns.insert(ue, Pattern::CellularUser(Subchannel::cellular(ue)));
    }

    let idle = detect_idle(&patterns, &receivers, deployment, channels, cfg);
    for &ue in &idle {
        patterns.insert(ue, Pattern::Idle);
    }

    let mut n_overlay = 0u32;
    let mut n_underlay = 0u32;
    let mut n_idle = assignment.n_unhosted;
    for pattern in patterns.values() {
        match pattern {
            Pattern::OverlayD2d(_) => n_overlay += 1,
            Pattern::UnderlayD2d { .. } => n_underlay += 1,
            _ => {}
        }
    }
    n_idle += idle.len() as u32;

    // Tagged links are the most central ones: 3D distance to the
    // ground-level center point, ties to the lowest id.
    let center = deployment.center();
    let closest_to_center = |ids: &mut dyn Iterator<Item = NodeId>| -> Option<NodeId> {
        ids.map(|id| {
            let p = deployment.node(id).pos;
            let d = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2) + p[2] * p[2];
            (d, id)
        })
        .min_by(|a, b| a.partial_cmp(b).unwrap())
        .map(|(_, id)| id)
    };
    let tagged_overlay = closest_to_center(
        &mut patterns
            .iter()
            .filter(|(_, p)| matches!(p, Pattern::OverlayD2d(_)))
            .map(|(&id, _)| id),
    );
    let tagged_cellular = closest_to_center(&mut cellular.iter().copied());

    let bandwidth_of = |p: &Pattern| -> f64 {
        match p.subchannel() {
            Some(s) => match s.class {
                SubchannelClass::Cellular => cell_bw,
                SubchannelClass::Overlay => ovl_bw,
            },
            None => 0.0,
        }
    };

    let assignments: BTreeMap<NodeId, UeAssignment> = patterns
        .iter()
        .map(|(&ue, p)| {
            let mode = if matches!(p, Pattern::CellularUser(_)) {
                Mode::Cellular
            } else {
                Mode::D2d
            };
            (
                ue,
                UeAssignment {
                    mode,
                    pattern: *p,
                    receiver: receivers[&ue],
                    bandwidth_hz: bandwidth_of(p),
                },
            )
        })
        .collect();

    let cochannel = cochannel_transmitters(&patterns);

    Ok(SpectrumPlan {
        strategy,
        assignments,
        cochannel,
        n_cellular: n_cellular_subchannels,
        n_overlay,
        n_underlay,
        n_idle,
        n_cellular_subchannels,
        n_overlay_subchannels,
        cellular_sub_bw_hz: cell_bw,
        overlay_sub_bw_hz: ovl_bw,
        tagged_overlay,
        tagged_cellular,
        jammers: Vec::new(),
        host_fallbacks: assignment.host_fallbacks,
    })
}
