//! Drop orchestration, seeded Monte Carlo ensembles, sweeps, and CSV output.
//!
//! Drops are independent tasks: each derives its own seed from
//! `(master_seed, drop_index)`, so any worker count produces byte-identical
//! results. Both strategies at one sweep point reuse the same drop seeds
//! (common random numbers), which makes strategy deltas paired and
//! low-variance.

use crate::channel::ChannelRealization;
use crate::config::{Scenario, SimConfig, Strategy, SweepSpec};
use crate::deployment::{place_nodes, Deployment};
use crate::rng::{self, stream};
use crate::secrecy::{tagged_link_secrecy, TaggedSecrecy};
use crate::spectrum::{build_plan, DegenerateDrop, Pattern, SpectrumPlan};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::io::{self, Write};
use thiserror::Error;

/// Which tagged link a statistic describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Overlay,
    Cellular,
}

impl LinkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkKind::Overlay => "overlay",
            LinkKind::Cellular => "cellular",
        }
    }
}

/// Outputs of one drop. A link rate is `None` when that link could not be
/// tagged; `degenerate` is set when the drop failed to produce the full
/// output pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DropResult {
    pub sr_overlay_bps: Option<f64>,
    pub sr_cellular_bps: Option<f64>,
    pub n_jammers_active: u32,
    pub n_idle: u32,
    pub n_cellular: u32,
    pub n_overlay: u32,
    pub n_underlay: u32,
    pub degenerate: bool,
}

impl DropResult {
    fn empty() -> Self {
        DropResult {
            sr_overlay_bps: None,
            sr_cellular_bps: None,
            n_jammers_active: 0,
            n_idle: 0,
            n_cellular: 0,
            n_overlay: 0,
            n_underlay: 0,
            degenerate: true,
        }
    }

    pub fn link_rate(&self, link: LinkKind) -> Option<f64> {
        match link {
            LinkKind::Overlay => self.sr_overlay_bps,
            LinkKind::Cellular => self.sr_cellular_bps,
        }
    }
}

/// Everything produced while running one drop; used by the dump paths and
/// by tests that need to inspect the plan.
#[derive(Debug, Clone)]
pub struct DropDetail {
    pub deployment: Deployment,
    pub plan: SpectrumPlan,
    pub secrecy: TaggedSecrecy,
    pub result: DropResult,
}

/// Runs the whole per-drop pipeline: placement, mode selection, pattern
/// assignment, bandwidth partition, idle detection, jammer selection for
/// the tagged links, and secrecy evaluation.
pub fn run_drop_detailed(
    cfg: &SimConfig,
    strategy: Strategy,
    drop_index: u64,
) -> Result<DropDetail, DegenerateDrop> {
    let seed = rng::drop_seed(cfg.master_seed, drop_index);
    let deployment = place_nodes(cfg, seed);
    let channels = ChannelRealization::new(rng::mix2(seed, stream::GAINS));
    let mut pattern_rng = ChaCha8Rng::seed_from_u64(rng::mix2(seed, stream::PATTERNS));

    let mut plan = build_plan(&deployment, &channels, cfg, strategy, &mut pattern_rng)?;
    let secrecy = tagged_link_secrecy(&plan, &deployment, &channels, cfg);
    plan.jammers = secrecy.jammers.clone();

    let distinct_jammers: BTreeSet<_> = secrecy.jammers.iter().map(|j| j.ue).collect();
    let result = DropResult {
        sr_overlay_bps: secrecy.sr_overlay_bps,
        sr_cellular_bps: secrecy.sr_cellular_bps,
        n_jammers_active: distinct_jammers.len() as u32,
        n_idle: plan.n_idle,
        n_cellular: plan.n_cellular,
        n_overlay: plan.n_overlay,
        n_underlay: plan.n_underlay,
        degenerate: secrecy.sr_overlay_bps.is_none() || secrecy.sr_cellular_bps.is_none(),
    };
    Ok(DropDetail {
        deployment,
        plan,
        secrecy,
        result,
    })
}

/// Runs one drop; structural failures yield an all-empty degenerate result.
pub fn run_drop(cfg: &SimConfig, strategy: Strategy, drop_index: u64) -> DropResult {
    match run_drop_detailed(cfg, strategy, drop_index) {
        Ok(detail) => detail.result,
        Err(_) => DropResult::empty(),
    }
}

/// Runs `n_drops` drops in parallel, ordered by drop index.
pub fn run_drops(cfg: &SimConfig, strategy: Strategy, n_drops: u32) -> Vec<DropResult> {
    (0..n_drops as u64)
        .into_par_iter()
        .map(|i| run_drop(cfg, strategy, i))
        .collect()
}

/// Aggregated secrecy statistics for one tagged link.
#[derive(Debug, Clone, PartialEq)]
pub struct SecrecyStats {
    pub link: LinkKind,
    pub strategy: Strategy,
    pub n_drops: u32,
    /// Drops where this link existed.
    pub n_effective: u32,
    pub skip_count: u32,
    /// NaN when no drop produced the link.
    pub mean_bps: f64,
    pub std_bps: f64,
    pub ci95_lo_bps: f64,
    pub ci95_hi_bps: f64,
}

/// Mean, sample std, and normal-approximation 95% CI over the drops where
/// the link existed.
pub fn aggregate(drops: &[DropResult], link: LinkKind, strategy: Strategy) -> SecrecyStats {
    let values: Vec<f64> = drops.iter().filter_map(|d| d.link_rate(link)).collect();
    let n_drops = drops.len() as u32;
    let n = values.len();
    if n == 0 {
        return SecrecyStats {
            link,
            strategy,
            n_drops,
            n_effective: 0,
            skip_count: n_drops,
            mean_bps: f64::NAN,
            std_bps: f64::NAN,
            ci95_lo_bps: f64::NAN,
            ci95_hi_bps: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n >= 2 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let half = 1.96 * std / (n as f64).sqrt();
    SecrecyStats {
        link,
        strategy,
        n_drops,
        n_effective: n as u32,
        skip_count: n_drops - n as u32,
        mean_bps: mean,
        std_bps: std,
        ci95_lo_bps: mean - half,
        ci95_hi_bps: mean + half,
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("all {n_drops} drops degenerate: no taggable link in any drop")]
    AllDegenerate { n_drops: u32 },
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

/// Monte Carlo ensemble for one (config, strategy) cell.
pub fn run_monte_carlo(
    cfg: &SimConfig,
    strategy: Strategy,
    n_drops: u32,
) -> Result<(SecrecyStats, SecrecyStats), EngineError> {
    let drops = run_drops(cfg, strategy, n_drops);
    let overlay = aggregate(&drops, LinkKind::Overlay, strategy);
    let cellular = aggregate(&drops, LinkKind::Cellular, strategy);
    if overlay.n_effective == 0 && cellular.n_effective == 0 {
        return Err(EngineError::AllDegenerate { n_drops });
    }
    Ok((overlay, cellular))
}

/// One CSV output row: a (sweep value, strategy, link) cell.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub sweep_param: String,
    pub sweep_value: f64,
    pub scenario: Scenario,
    pub stats: SecrecyStats,
}

/// Full sweep output plus flags for cells where every drop was degenerate
/// for one of the links.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub degenerate_cells: bool,
}

/// Runs the Cartesian product sweep values x strategies x {overlay,
/// cellular}, sweep value major. Per-cell degeneracy is recorded, not
/// fatal.
pub fn run_sweep(
    cfg: &SimConfig,
    sweep: Option<&SweepSpec>,
    strategies: &[Strategy],
) -> Result<SweepResult, EngineError> {
    let cells: Vec<(String, f64, SimConfig)> = match sweep {
        Some(s) => crate::config::expand_sweep(cfg, s)?
            .into_iter()
            .zip(&s.values)
            .map(|(c, &v)| (s.parameter_name.clone(), v, c))
            .collect(),
        None => vec![("none".to_string(), 0.0, cfg.clone())],
    };

    let mut rows = Vec::new();
    let mut degenerate_cells = false;
    for (param, value, cell_cfg) in &cells {
        for &strategy in strategies {
            let drops = run_drops(cell_cfg, strategy, cell_cfg.n_drops);
            for link in [LinkKind::Overlay, LinkKind::Cellular] {
                let stats = aggregate(&drops, link, strategy);
                if stats.n_effective == 0 {
                    degenerate_cells = true;
                }
                rows.push(SweepRow {
                    sweep_param: param.clone(),
                    sweep_value: *value,
                    scenario: cell_cfg.scenario,
                    stats,
                });
            }
        }
    }
    Ok(SweepResult {
        rows,
        degenerate_cells,
    })
}

/// Exact CSV header for sweep output.
pub const CSV_HEADER: &str = "sweep_param,sweep_value,scenario,strategy,link,n_drops,n_effective,skip_count,mean_bps,std_bps,ci95_lo_bps,ci95_hi_bps";

/// Writes the sweep table: header plus one row per cell, deterministic
/// order, round-trip-safe decimal formatting.
pub fn emit_csv(rows: &[SweepRow], out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        let s = &r.stats;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.sweep_param,
            r.sweep_value,
            r.scenario,
            s.strategy,
            s.link.as_str(),
            s.n_drops,
            s.n_effective,
            s.skip_count,
            s.mean_bps,
            s.std_bps,
            s.ci95_lo_bps,
            s.ci95_hi_bps
        )?;
    }
    Ok(())
}

/// Paired (common-random-number) comparison of two strategies on one link.
#[derive(Debug, Clone, Copy)]
pub struct PairedComparison {
    pub link: LinkKind,
    pub n_pairs: u32,
    /// Mean of (a - b) over drops where both produced the link.
    pub mean_delta_bps: f64,
    /// Standard error of the mean delta.
    pub se_delta_bps: f64,
}

/// Pairs two drop vectors by index; `None` without any complete pair.
pub fn paired_comparison(
    a: &[DropResult],
    b: &[DropResult],
    link: LinkKind,
) -> Option<PairedComparison> {
    let deltas: Vec<f64> = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| Some(x.link_rate(link)? - y.link_rate(link)?))
        .collect();
    let n = deltas.len();
    if n == 0 {
        return None;
    }
    let mean = deltas.iter().sum::<f64>() / n as f64;
    let var = if n >= 2 {
        deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Some(PairedComparison {
        link,
        n_pairs: n as u32,
        mean_delta_bps: mean,
        se_delta_bps: (var / n as f64).sqrt(),
    })
}

/// Writes one drop's nodes as `id,role,x,y,z`.
pub fn write_deployment_csv(deployment: &Deployment, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "id,role,x,y,z")?;
    for n in &deployment.nodes {
        writeln!(
            out,
            "{},{},{},{},{}",
            n.id,
            n.role.as_str(),
            n.pos[0],
            n.pos[1],
            n.pos[2]
        )?;
    }
    Ok(())
}

/// Writes one drop's per-UE assignments as
/// `ue_id,mode,pattern,subchannel,bandwidth_hz,host_id`. A UE activated as
/// a jammer gets one row per protected subchannel.
pub fn write_plan_csv(plan: &SpectrumPlan, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "ue_id,mode,pattern,subchannel,bandwidth_hz,host_id")?;
    for (&ue, a) in &plan.assignments {
        let targets: Vec<_> = plan.jammers.iter().filter(|j| j.ue == ue).collect();
        if targets.is_empty() {
            let sub = a
                .pattern
                .subchannel()
                .map(|s| s.to_string())
                .unwrap_or_default();
            let host = match a.pattern {
                Pattern::UnderlayD2d { host } => host.owner.to_string(),
                _ => String::new(),
            };
            writeln!(
                out,
                "{},{},{},{},{},{}",
                ue,
                a.mode.as_str(),
                a.pattern.as_str(),
                sub,
                a.bandwidth_hz,
                host
            )?;
        } else {
            for j in targets {
                writeln!(
                    out,
                    "{},{},jammer,{},{},",
                    ue,
                    a.mode.as_str(),
                    j.target,
                    0.0
                )?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{table1_aerial_ue, table1_flying_bs};

    /// Desk-sized flying-BS config that stays fast in unit tests.
    fn small_flying_bs() -> SimConfig {
        let mut cfg = table1_flying_bs();
        cfg.area_m2 = 2500.0;
        cfg.uav_density_per_m2 = 2e-3; // ~5 flying BSs
        cfg.ue_density_per_m2 = 0.08; // ~200 UEs
        cfg.eaves_density_per_m2 = 0.01;
        cfg.n_drops = 20;
        cfg
    }

    /// Small aerial-UE config where both tagged links usually exist.
    fn small_aerial_ue() -> SimConfig {
        let mut cfg = table1_aerial_ue();
        cfg.area_m2 = 1e4;
        cfg.bs_density_per_m2 = 8e-4; // ~8 BSs
        cfg.uav_density_per_m2 = 2e-3; // ~20 aerial UEs
        cfg.ue_density_per_m2 = 0.03; // ~300 ground UEs
        cfg.eaves_density_per_m2 = 0.01;
        cfg.n_drops = 20;
        cfg
    }

    #[test]
    fn drop_counts_partition_transmitting_ues() {
        let cfg = small_flying_bs();
        let detail = run_drop_detailed(&cfg, Strategy::New, 0).unwrap();
        let total = detail.result.n_cellular
            + detail.result.n_overlay
            + detail.result.n_underlay
            + detail.result.n_idle;
        assert_eq!(
            total as usize,
            detail.deployment.transmitting_ue_ids().len()
        );
    }

    #[test]
    fn no_eavesdroppers_gives_plain_link_rates() {
        let mut cfg = small_flying_bs();
        cfg.eaves_density_per_m2 = 0.0;
        let detail = run_drop_detailed(&cfg, Strategy::New, 1).unwrap();
        let sr = detail.result.sr_overlay_bps.expect("overlay link tagged");
        let tx = detail.plan.tagged_overlay.unwrap();
        let sinr = crate::secrecy::receiver_sinr(
            tx,
            &[],
            &detail.plan,
            &detail.deployment,
            &ChannelRealization::new(rng::mix2(rng::drop_seed(cfg.master_seed, 1), stream::GAINS)),
            &cfg,
        );
        let want = detail.plan.assignments[&tx].bandwidth_hz * (1.0 + sinr).log2();
        assert!((sr - want).abs() <= 1e-9 * want.abs().max(1.0));
        assert_eq!(detail.result.n_jammers_active, 0);
    }

    #[test]
    fn fixed_seed_reruns_bit_identical() {
        let cfg = small_aerial_ue();
        let a = run_drop(&cfg, Strategy::New, 3);
        let b = run_drop(&cfg, Strategy::New, 3);
        assert_eq!(a, b);
        let bits = |v: Option<f64>| v.map(f64::to_bits);
        assert_eq!(bits(a.sr_overlay_bps), bits(b.sr_overlay_bps));
        assert_eq!(bits(a.sr_cellular_bps), bits(b.sr_cellular_bps));
    }

    #[test]
    fn single_drop_ensemble_stats_degenerate_ci() {
        let cfg = small_aerial_ue();
        let (overlay, _) = run_monte_carlo(&cfg, Strategy::New, 1).unwrap();
        if overlay.n_effective == 1 {
            let d = run_drop(&cfg, Strategy::New, 0);
            assert_eq!(overlay.mean_bps, d.sr_overlay_bps.unwrap());
            assert_eq!(overlay.std_bps, 0.0);
            assert_eq!(overlay.ci95_lo_bps, overlay.mean_bps);
            assert_eq!(overlay.ci95_hi_bps, overlay.mean_bps);
        }
    }

    #[test]
    fn serial_and_parallel_schedules_agree() {
        let cfg = small_flying_bs();
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_drops(&cfg, Strategy::New, 12));
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| run_drops(&cfg, Strategy::New, 12));
        assert_eq!(serial, parallel);
    }

    #[test]
    fn doubling_drops_shrinks_ci_roughly_sqrt2() {
        let cfg = small_aerial_ue();
        let drops = run_drops(&cfg, Strategy::New, 400);
        let half = aggregate(&drops[..200], LinkKind::Overlay, Strategy::New);
        let full = aggregate(&drops, LinkKind::Overlay, Strategy::New);
        let w_half = half.ci95_hi_bps - half.ci95_lo_bps;
        let w_full = full.ci95_hi_bps - full.ci95_lo_bps;
        let ratio = w_full / w_half;
        assert!(
            (ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.12,
            "ratio {ratio}"
        );
    }

    #[test]
    fn sweep_produces_value_major_rows() {
        let mut cfg = small_flying_bs();
        cfg.n_drops = 4;
        let sweep = SweepSpec::new("eaves_density_per_m2", vec![0.005, 0.02]).unwrap();
        let out = run_sweep(&cfg, Some(&sweep), &[Strategy::Traditional, Strategy::New]).unwrap();
        assert_eq!(out.rows.len(), 8);
        assert_eq!(out.rows[0].sweep_value, 0.005);
        assert_eq!(out.rows[0].stats.strategy, Strategy::Traditional);
        assert_eq!(out.rows[0].stats.link, LinkKind::Overlay);
        assert_eq!(out.rows[1].stats.link, LinkKind::Cellular);
        assert_eq!(out.rows[2].stats.strategy, Strategy::New);
        assert_eq!(out.rows[4].sweep_value, 0.02);
        for r in &out.rows {
            assert_eq!(r.stats.n_effective + r.stats.skip_count, r.stats.n_drops);
        }
    }

    #[test]
    fn csv_shape_and_determinism() {
        let mut cfg = small_flying_bs();
        cfg.n_drops = 4;
        let sweep = SweepSpec::new("eaves_density_per_m2", vec![0.005, 0.02]).unwrap();
        let out = run_sweep(&cfg, Some(&sweep), &[Strategy::Traditional, Strategy::New]).unwrap();
        let mut a = Vec::new();
        emit_csv(&out.rows, &mut a).unwrap();
        let text = String::from_utf8(a.clone()).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.starts_with(CSV_HEADER));

        let out2 = run_sweep(&cfg, Some(&sweep), &[Strategy::Traditional, Strategy::New]).unwrap();
        let mut b = Vec::new();
        emit_csv(&out2.rows, &mut b).unwrap();
        assert_eq!(a, b, "re-run with same seed must be byte-identical");

        let mut empty = Vec::new();
        emit_csv(&[], &mut empty).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().lines().count(), 1);
    }

    #[test]
    fn all_degenerate_ensemble_is_an_error() {
        let mut cfg = small_flying_bs();
        // No transmitting UEs: mode selection needs two, so every drop
        // fails structurally.
        cfg.ue_density_per_m2 = 0.0;
        let err = run_monte_carlo(&cfg, Strategy::New, 5).unwrap_err();
        assert!(matches!(err, EngineError::AllDegenerate { n_drops: 5 }));
    }

    #[test]
    fn paired_comparison_uses_common_drops() {
        let cfg = small_aerial_ue();
        let new = run_drops(&cfg, Strategy::New, 30);
        let trad = run_drops(&cfg, Strategy::Traditional, 30);
        let cmp = paired_comparison(&new, &trad, LinkKind::Overlay).unwrap();
        assert!(cmp.n_pairs > 0);
        assert!(cmp.se_delta_bps.is_finite());
        // Self-comparison is exactly zero with zero spread.
        let self_cmp = paired_comparison(&new, &new, LinkKind::Overlay).unwrap();
        assert_eq!(self_cmp.mean_delta_bps, 0.0);
        assert_eq!(self_cmp.se_delta_bps, 0.0);
    }

    #[test]
    fn dump_csvs_have_expected_headers() {
        let cfg = small_flying_bs();
        let detail = run_drop_detailed(&cfg, Strategy::New, 0).unwrap();
        let mut dep = Vec::new();
        write_deployment_csv(&detail.deployment, &mut dep).unwrap();
        let dep = String::from_utf8(dep).unwrap();
        assert!(dep.starts_with("id,role,x,y,z\n"));
        assert_eq!(dep.lines().count(), detail.deployment.nodes.len() + 1);

        let mut plan = Vec::new();
        write_plan_csv(&detail.plan, &mut plan).unwrap();
        let plan = String::from_utf8(plan).unwrap();
        assert!(plan.starts_with("ue_id,mode,pattern,subchannel,bandwidth_hz,host_id\n"));
    }
}
