use std::io::Write;

use super::{Mesh, ScalarField};
use crate::error::{Error, Result};

impl Mesh {
    /// Writes the sphere triangulation in OFF format.
    pub fn write_off<W: Write>(&self, mut out: W) -> Result<()> {
        if !self.is_sphere() {
            return Err(Error::NotASphereMesh);
        }
        writeln!(out, "OFF")?;
        writeln!(out, "{} {} 0", self.len(), self.triangles.len())?;
        for p in &self.points {
            writeln!(out, "{:.17e} {:.17e} {:.17e}", p.x, p.y, p.z)?;
        }
        for [a, b, c] in &self.triangles {
            writeln!(out, "3 {a} {b} {c}")?;
        }
        Ok(())
    }
}

impl ScalarField {
    /// Writes one row per vertex: the coordinates, the vertex mass and the value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mesh = self.mesh();
        let mut header: Vec<&str> = mesh.coords().to_vec();
        header.extend(["weight", "value"]);
        w.write_record(&header)?;
        for i in 0..mesh.len() {
            let mut row: Vec<String> = mesh.coordinates(i).iter().map(|c| format!("{c:.16e}")).collect();
            row.push(format!("{:.16e}", mesh.weights()[i]));
            row.push(format!("{:.16e}", self.values()[i]));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
