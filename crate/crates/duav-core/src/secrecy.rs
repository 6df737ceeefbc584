//! Secrecy evaluation: interference- and jamming-aware SINRs at the
//! legitimate receiver and at the eavesdropper, and the clamped secrecy
//! rate `B * [log2(1+SINR_rx) - log2(1+SINR_e)]+`.
//!
//! Jamming power sits in both denominators; the rate improves only when the
//! jammers hurt the eavesdropper more than the receiver, which is what the
//! strong-jammer selection aims for.

use crate::channel::ChannelRealization;
use crate::config::{SimConfig, Strategy};
use crate::deployment::{Deployment, Node, NodeId, SpatialIndex};
use crate::spectrum::{JammerAssignment, Pattern, SpectrumPlan, Subchannel};
use std::collections::BTreeSet;

/// All power terms entering one receive-side SINR.
#[derive(Debug, Clone, Copy)]
pub struct LinkBudget {
    pub tx: NodeId,
    pub rx: NodeId,
    pub subchannel: Subchannel,
    pub bandwidth_hz: f64,
    pub signal_mw: f64,
    /// Co-channel data transmitters received at `rx`.
    pub interference_mw: f64,
    /// Active jammers on the subchannel received at `rx`.
    pub jamming_mw: f64,
    pub noise_mw: f64,
}

impl LinkBudget {
    pub fn sinr(&self) -> f64 {
        self.signal_mw / (self.noise_mw + self.interference_mw + self.jamming_mw)
    }
}

/// Active co-channel transmitters for a link: everyone assigned to the same
/// subchannel except the link's own transmitter.
pub fn interferer_set(link_tx: NodeId, sub: Subchannel, plan: &SpectrumPlan) -> Vec<NodeId> {
    plan.cochannel_excluding(sub, link_tx)
}

/// Receives the (tx -> at) leg together with co-channel interference and
/// jamming, each leg classified by its own endpoints.
#[allow(clippy::too_many_arguments)]
pub fn link_budget_at(
    link_tx: NodeId,
    at: NodeId,
    sub: Subchannel,
    bandwidth_hz: f64,
    jammers: &[NodeId],
    plan: &SpectrumPlan,
    deployment: &Deployment,
    channels: &ChannelRealization,
    cfg: &SimConfig,
) -> LinkBudget {
    let rx = deployment.node(at);
    let tx = deployment.node(link_tx);
    let signal = channels.leg_power_mw(tx, rx, deployment.tx_power_mw(link_tx, cfg), cfg);
    let interference: f64 = interferer_set(link_tx, sub, plan)
        .iter()
        .map(|&i| {
            let it = deployment.node(i);
            channels.leg_power_mw(it, rx, deployment.tx_power_mw(i, cfg), cfg)
        })
        .sum();
    let jamming: f64 = jammers
        .iter()
        .map(|&j| {
            let jn = deployment.node(j);
            channels.leg_power_mw(jn, rx, cfg.jammer_tx_mw(), cfg)
        })
        .sum();
    LinkBudget {
        tx: link_tx,
        rx: at,
        subchannel: sub,
        bandwidth_hz,
        signal_mw: signal,
        interference_mw: interference,
        jamming_mw: jamming,
        noise_mw: cfg.noise_mw(),
    }
}

/// SINR at the link's own receiver.
pub fn receiver_sinr(
    link_tx: NodeId,
    jammers: &[NodeId],
    plan: &SpectrumPlan,
    deployment: &Deployment,
    channels: &ChannelRealization,
    cfg: &SimConfig,
) -> f64 {
    let a = &plan.assignments[&link_tx];
    let sub = a.pattern.subchannel().expect("link transmitter is active");
    link_budget_at(
        link_tx,
        a.receiver,
        sub,
        a.bandwidth_hz,
        jammers,
        plan,
        deployment,
        channels,
        cfg,
    )
    .sinr()
}

/// SINR of the link's transmission as received by an eavesdropper.
pub fn eavesdropper_sinr(
    link_tx: NodeId,
    eaves: NodeId,
    jammers: &[NodeId],
    plan: &SpectrumPlan,
    deployment: &Deployment,
    channels: &ChannelRealization,
    cfg: &SimConfig,
) -> f64 {
    let a = &plan.assignments[&link_tx];
    let sub = a.pattern.subchannel().expect("link transmitter is active");
    link_budget_at(
        link_tx,
        eaves,
        sub,
        a.bandwidth_hz,
        jammers,
        plan,
        deployment,
        channels,
        cfg,
    )
    .sinr()
}

/// The eavesdropper wiretapping a link: the one nearest to its transmitter,
/// ties to the lowest id. `None` when the drop has no eavesdroppers.
pub fn eavesdropper_for(tx: &Node, deployment: &Deployment, cfg: &SimConfig) -> Option<NodeId> {
    let ids = deployment.eavesdropper_ids();
    if ids.is_empty() {
        return None;
    }
    let index = SpatialIndex::build(
        ids.iter().map(|&id| (id, deployment.node(id).pos)),
        cfg.area_m2,
    );
    index.nearest(tx.pos, None).map(|(id, _)| id)
}

/// Clamped secrecy rate in bits per second.
pub fn secrecy_rate(bandwidth_hz: f64, sinr_rx: f64, sinr_e: f64) -> f64 {
    bandwidth_hz * ((1.0 + sinr_rx).log2() - (1.0 + sinr_e).log2()).max(0.0)
}

/// Secrecy outputs of one drop's tagged links.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedSecrecy {
    pub sr_overlay_bps: Option<f64>,
    pub sr_cellular_bps: Option<f64>,
    /// Jammers activated for the tagged links (new strategy only).
    pub jammers: Vec<JammerAssignment>,
}

/// Full per-drop secrecy pipeline for the tagged overlay pair and the
/// tagged cellular UE: find the wiretapper, activate strong jammers (new
/// strategy), then evaluate both receive-side SINRs and the clamped rate.
pub fn tagged_link_secrecy(
    plan: &SpectrumPlan,
    deployment: &Deployment,
    channels: &ChannelRealization,
    cfg: &SimConfig,
) -> TaggedSecrecy {
    let idle: BTreeSet<NodeId> = plan
        .assignments
        .iter()
        .filter(|(_, a)| matches!(a.pattern, Pattern::Idle))
        .map(|(&id, _)| id)
        .collect();

    let eaves_index = {
        let ids = deployment.eavesdropper_ids();
        if ids.is_empty() {
            None
        } else {
            Some(SpatialIndex::build(
                ids.iter().map(|&id| (id, deployment.node(id).pos)),
                cfg.area_m2,
            ))
        }
    };

    let mut all_jammers = Vec::new();
    let mut eval = |tagged: Option<NodeId>| -> Option<f64> {
        let tx_id = tagged?;
        let a = &plan.assignments[&tx_id];
        let sub = a.pattern.subchannel().expect("tagged link is active");
        let tx = deployment.node(tx_id);
        let eaves = eaves_index
            .as_ref()
            .and_then(|idx| idx.nearest(tx.pos, None))
            .map(|(id, _)| id);

        let jammers: Vec<NodeId> = match (plan.strategy, eaves) {
            (Strategy::New, Some(e)) => crate::spectrum::select_jammers(
                &idle,
                deployment.node(a.receiver),
                deployment.node(e),
                channels,
                cfg,
                deployment,
            ),
            _ => Vec::new(),
        };
        all_jammers.extend(
            jammers
                .iter()
                .map(|&ue| JammerAssignment { ue, target: sub }),
        );

        let sinr_rx = link_budget_at(
            tx_id,
            a.receiver,
            sub,
            a.bandwidth_hz,
            &jammers,
            plan,
            deployment,
            channels,
            cfg,
        )
        .sinr();
        Some(match eaves {
            None => a.bandwidth_hz * (1.0 + sinr_rx).log2(),
            Some(e) => {
                let sinr_e = link_budget_at(
                    tx_id,
                    e,
                    sub,
                    a.bandwidth_hz,
                    &jammers,
                    plan,
                    deployment,
                    channels,
                    cfg,
                )
                .sinr();
                secrecy_rate(a.bandwidth_hz, sinr_rx, sinr_e)
            }
        })
    };

    let sr_overlay_bps = eval(plan.tagged_overlay);
    let sr_cellular_bps = eval(plan.tagged_cellular);

    TaggedSecrecy {
        sr_overlay_bps,
        sr_cellular_bps,
        jammers: all_jammers,
    }
}
