//! Top-level samplers: configuration multigraphs, switched simple graphs, and
//! exactly uniform simple graphs by rejection.
//!
//! Draw order (fixed, so equal seeds give equal output): the configuration
//! sampler walks half-edges in increasing index; each still-unmatched
//! half-edge consumes one `gen_range` over the remaining unmatched
//! half-edges to pick its mate. The switching engine then consumes, per
//! step, one `gen_range` over bad edges (random rule only) followed by one
//! or more half-edge draws for the partner.

use std::sync::Arc;

use crate::degseq::DegreeSequence;
use crate::error::{Error, Result};
use crate::multigraph::{Configuration, HalfEdgeLayout, Multigraph};
use crate::switching::{run_to_simple, BadEdgeRule, SwitchOutcome, SwitchVariant};
use rand::Rng;

pub const DEFAULT_MAX_ATTEMPTS: u64 = 10_000;

/// Uniform perfect matching of the half-edges.
pub fn sample_configuration<R: Rng + ?Sized>(seq: &DegreeSequence, rng: &mut R) -> Result<Configuration> {
    seq.require_even()?;
    Ok(sample_configuration_in(Arc::new(HalfEdgeLayout::new(seq)), rng))
}

/// Same as [`sample_configuration`] for a prepared layout with an even
/// number of half-edges.
pub fn sample_configuration_in<R: Rng + ?Sized>(layout: Arc<HalfEdgeLayout>, rng: &mut R) -> Configuration {
    let total = layout.len();
    debug_assert!(total.is_multiple_of(2));
    let mut mate = vec![u32::MAX; total];
    // free[..live] holds the unmatched half-edges; pos is the inverse map
    let mut free: Vec<u32> = (0..total as u32).collect();
    let mut pos: Vec<u32> = (0..total as u32).collect();
    let mut live = total;
    let remove = |free: &mut Vec<u32>, pos: &mut Vec<u32>, live: &mut usize, h: u32| {
        let at = pos[h as usize] as usize;
        let last = free[*live - 1];
        free[at] = last;
        pos[last as usize] = at as u32;
        free[*live - 1] = h;
        pos[h as usize] = (*live - 1) as u32;
        *live -= 1;
    };
    for h in 0..total as u32 {
        if mate[h as usize] != u32::MAX {
            continue;
        }
        remove(&mut free, &mut pos, &mut live, h);
        let partner = free[rng.gen_range(0..live)];
        remove(&mut free, &mut pos, &mut live, partner);
        mate[h as usize] = partner;
        mate[partner as usize] = h;
    }
    Configuration::from_mates(layout, mate).expect("sequential matching is perfect")
}

pub fn sample_multigraph<R: Rng + ?Sized>(seq: &DegreeSequence, rng: &mut R) -> Result<Multigraph> {
    Ok(sample_configuration(seq, rng)?.project())
}

#[derive(Clone, Debug)]
pub struct UniformSample {
    pub graph: Multigraph,
    /// Configurations drawn, including the accepted one.
    pub attempts: u64,
}

/// Uniform simple graph: redraws whole configurations until one is simple.
pub fn sample_uniform_simple<R: Rng + ?Sized>(
    seq: &DegreeSequence,
    rng: &mut R,
    max_attempts: u64,
) -> Result<UniformSample> {
    seq.require_graphical()?;
    let layout = Arc::new(HalfEdgeLayout::new(seq));
    for attempt in 1..=max_attempts {
        let c = sample_configuration_in(layout.clone(), rng);
        if c.is_simple() {
            return Ok(UniformSample { graph: c.project(), attempts: attempt });
        }
    }
    Err(Error::RejectionExhausted { attempts: max_attempts, rate: 0.0 })
}

/// Configuration multigraph repaired by switchings.
pub fn sample_switched<R: Rng + ?Sized>(
    seq: &DegreeSequence,
    rule: BadEdgeRule,
    variant: SwitchVariant,
    rng: &mut R,
) -> Result<SwitchOutcome> {
    seq.require_graphical()?;
    let config = sample_configuration(seq, rng)?;
    run_to_simple(config, rule, variant, rng, None)
}
