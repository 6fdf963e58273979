//! The composite step reward, transcribed line by line from the published
//! algorithm with plain arguments instead of environment types.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Other,
}

pub struct RewardInputs<'a> {
    pub next_status: Status,
    pub diagnosis: Option<&'a [&'a str]>,
    pub iis_gt: &'a [&'a str],
    /// Step counter of the state before the action.
    pub step: u32,
    /// `Some(target)` for RELAX / DROP / REWRITE.
    pub repair_target: Option<&'a str>,
    /// IIS used for the faithfulness check.
    pub reference_iis: &'a [&'a str],
}

pub fn reward(inp: &RewardInputs) -> f64 {
    let mut r = 0.0;
    if inp.next_status == Status::Optimal {
        r += 0.5 * 100.0;
    } else if inp.next_status == Status::Infeasible {
        r += 0.5 * -50.0;
    }
    if let Some(d) = inp.diagnosis {
        let hit = inp.iis_gt.iter().filter(|g| d.contains(g)).count();
        let da = hit as f64 / inp.iis_gt.len() as f64;
        r += 0.3 * (da * 100.0);
    }
    let eta = f64::max(0.0, (50.0 - inp.step as f64) / 50.0);
    r += 0.2 * (eta * 50.0);
    if let Some(t) = inp.repair_target {
        if !inp.reference_iis.contains(&t) {
            r -= 20.0;
        }
    }
    r
}
