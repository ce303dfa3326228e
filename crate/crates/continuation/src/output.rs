use serde::Serialize;
use std::fmt::Write as _;

use crate::bifurcation::BifurcationPoint;
use crate::branch::Branch;

/// Branch table with 17 significant digits.
pub fn branch_csv(branch: &Branch) -> String {
    let mut s = String::from("arclength,lambda1,lambda2,v,E_normalized,n_unstable,amp_re,amp_im,n_nodes\n");
    for st in &branch.states {
        let _ = writeln!(
            s,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{}",
            st.arclength,
            st.lambda.0,
            st.lambda.1,
            st.diagnostics.reduced_volume,
            st.diagnostics.normalized_energy,
            st.n_unstable,
            st.amplitude.re,
            st.amplitude.im,
            st.mesh.n_dofs()
        );
    }
    s
}

#[derive(Serialize)]
struct Record {
    lambda2: f64,
    mode_m: i32,
    mode_n: i32,
    multiplicity: usize,
}

pub fn bifurcations_json(points: &[BifurcationPoint]) -> String {
    let records: Vec<Record> = points
        .iter()
        .map(|p| Record { lambda2: p.lambda2, mode_m: p.mode_m, mode_n: p.mode_n, multiplicity: p.multiplicity })
        .collect();
    serde_json::to_string_pretty(&records).expect("plain records serialize")
}
