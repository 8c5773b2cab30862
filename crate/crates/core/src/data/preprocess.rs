//! Feature transformations: log columns, azimuth-angle rotation relative to
//! an anchor object, and column drops.

use std::f64::consts::PI;

use crate::error::{Error, Result};

use super::{EventTable, PreprocessRecipe};

/// Wrap an angle into (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Apply a [`PreprocessRecipe`] (log transforms, φ rotation, column drops).
///
/// Angle columns are those whose name ends in `_phi`. When an anchor is
/// set, each of them becomes `wrap(phi − anchor)` row-wise and the anchor
/// column is removed, making the angles rotation-invariant features.
pub fn preprocess(table: &EventTable, recipe: &PreprocessRecipe) -> Result<EventTable> {
    let mut out = table.clone();

    for name in &recipe.log_columns {
        let j = out
            .column_index(name)
            .ok_or_else(|| Error::Schema(format!("missing log column '{name}'")))?;
        let col = out.column(j);
        if let Some(i) = col.iter().position(|v| *v <= 0.0) {
            return Err(Error::Domain(format!(
                "log column '{name}' has non-positive value {} at row {}",
                col[i],
                i + 1
            )));
        }
        let logged = col.iter().map(|v| v.ln()).collect();
        out.replace_column(j, logged);
    }

    let mut dropped: Vec<String> = recipe.drop_columns.clone();
    if let Some(anchor) = &recipe.phi_rotation_anchor {
        let aj = out
            .column_index(anchor)
            .ok_or_else(|| Error::Schema(format!("missing rotation anchor column '{anchor}'")))?;
        let anchor_vals = out.column(aj).to_vec();
        let phi_cols: Vec<usize> = (0..out.n_cols())
            .filter(|&j| j != aj && out.names()[j].ends_with("_phi"))
            .collect();
        for j in phi_cols {
            let rotated = out
                .column(j)
                .iter()
                .zip(&anchor_vals)
                .map(|(phi, a)| wrap_angle(phi - a))
                .collect();
            out.replace_column(j, rotated);
        }
        dropped.push(anchor.clone());
    }

    for name in &recipe.drop_columns {
        if out.column_index(name).is_none() {
            return Err(Error::Schema(format!("missing drop column '{name}'")));
        }
    }
    if !dropped.is_empty() {
        let keep: Vec<usize> = (0..out.n_cols())
            .filter(|&j| !dropped.contains(&out.names()[j]))
            .collect();
        if keep.is_empty() {
            return Err(Error::Schema("recipe drops every column".into()));
        }
        out = out.keep_columns(&keep);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(names: &[&str], cols: Vec<Vec<f64>>) -> EventTable {
        EventTable::new(names.iter().map(|s| s.to_string()).collect(), cols, None, None).unwrap()
    }

    #[test]
    fn log_of_e_is_one() {
        let t = table(&["energy"], vec![vec![std::f64::consts::E]]);
        let recipe = PreprocessRecipe { log_columns: vec!["energy".into()], ..Default::default() };
        let out = preprocess(&t, &recipe).unwrap();
        assert!((out.column(0)[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn log_rejects_non_positive() {
        let t = table(&["energy"], vec![vec![1.0, 0.0]]);
        let recipe = PreprocessRecipe { log_columns: vec!["energy".into()], ..Default::default() };
        assert!(matches!(preprocess(&t, &recipe), Err(Error::Domain(_))));
    }

    #[test]
    fn self_rotation_is_zero_and_anchor_dropped() {
        let t = table(
            &["tau_phi", "lead_phi"],
            vec![vec![PI / 2.0], vec![PI / 2.0]],
        );
        let recipe = PreprocessRecipe {
            phi_rotation_anchor: Some("lead_phi".into()),
            ..Default::default()
        };
        let out = preprocess(&t, &recipe).unwrap();
        assert_eq!(out.names(), ["tau_phi"]);
        assert_eq!(out.column(0)[0], 0.0);
    }

    // Modular-arithmetic oracle: wrap(−5) = 2π − 5 ≈ 1.2832.
    #[test]
    fn rotation_wraps_into_half_open_interval() {
        let t = table(&["tau_phi", "lead_phi"], vec![vec![-3.0], vec![2.0]]);
        let recipe = PreprocessRecipe {
            phi_rotation_anchor: Some("lead_phi".into()),
            ..Default::default()
        };
        let out = preprocess(&t, &recipe).unwrap();
        let expected = 2.0 * PI - 5.0;
        assert!((out.column(0)[0] - expected).abs() < 1e-12);
        assert!((expected - 1.2832).abs() < 1e-4);
    }

    #[test]
    fn wrap_boundary_convention() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!(wrap_angle(PI + 1e-9) < 0.0);
        // idempotent on already-wrapped values
        for &x in &[-3.0, -0.5, 0.0, 1.0, PI] {
            let w = wrap_angle(x);
            assert_eq!(wrap_angle(w), w);
        }
    }

    #[test]
    fn empty_recipe_is_identity() {
        let t = table(&["a_phi", "b"], vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let out = preprocess(&t, &PreprocessRecipe::default()).unwrap();
        assert_eq!(out.names(), t.names());
        assert_eq!(out.column(0), t.column(0));
        assert_eq!(out.column(1), t.column(1));
    }

    #[test]
    fn missing_drop_column_is_schema_error() {
        let t = table(&["a"], vec![vec![1.0]]);
        let recipe = PreprocessRecipe { drop_columns: vec!["zzz".into()], ..Default::default() };
        assert!(matches!(preprocess(&t, &recipe), Err(Error::Schema(_))));
    }
}
