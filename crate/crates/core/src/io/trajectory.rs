//! Trajectory CSV: `step,kT,energy,Rg_A,rmsd_A,acceptance`.

use crate::dynamics::Trajectory;

/// Serializes a trajectory. Each `header` entry becomes a `#` line, followed
/// by the seed. Numbers use the shortest representation that reads back
/// exactly; a missing RMSD is an empty cell.
pub fn trajectory_to_csv(trajectory: &Trajectory, header: &[String]) -> String {
    let mut out = String::new();
    for line in header {
        out.push_str(&format!("# {line}\n"));
    }
    out.push_str(&format!("# seed: {}\n", trajectory.seed));
    out.push_str("step,kT,energy,Rg_A,rmsd_A,acceptance\n");
    for s in &trajectory.samples {
        let rmsd = s.rmsd.map_or_else(String::new, |r| r.to_string());
        out.push_str(&format!("{},{},{},{},{},{}\n", s.step, s.kt, s.energy, s.rg, rmsd, s.acceptance));
    }
    out
}
