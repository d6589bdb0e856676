//! Bilinear quadrilateral written out independently of the library: plane
//! strain, 2x2 Gauss, AT2 regularisation with the isotropic degradation.

const G: f64 = 0.577_350_269_189_625_8;

pub struct Material {
    pub lambda: f64,
    pub mu: f64,
    pub gc: f64,
    pub l: f64,
    pub k: f64,
}

pub fn energy(x: &[[f64; 2]; 4], u: &[f64], phi: &[f64], m: &Material) -> f64 {
    let xi_n = [-1.0, 1.0, 1.0, -1.0];
    let eta_n = [-1.0, -1.0, 1.0, 1.0];
    let mut total = 0.0;
    for (xi, eta) in [(-G, -G), (G, -G), (G, G), (-G, G)] {
        let mut n = [0.0; 4];
        let mut dxi = [0.0; 4];
        let mut deta = [0.0; 4];
        for a in 0..4 {
            n[a] = 0.25 * (1.0 + xi_n[a] * xi) * (1.0 + eta_n[a] * eta);
            dxi[a] = 0.25 * xi_n[a] * (1.0 + eta_n[a] * eta);
            deta[a] = 0.25 * eta_n[a] * (1.0 + xi_n[a] * xi);
        }
        let (mut j11, mut j12, mut j21, mut j22) = (0.0, 0.0, 0.0, 0.0);
        for a in 0..4 {
            j11 += dxi[a] * x[a][0];
            j12 += dxi[a] * x[a][1];
            j21 += deta[a] * x[a][0];
            j22 += deta[a] * x[a][1];
        }
        let det = j11 * j22 - j12 * j21;
        let mut dx = [0.0; 4];
        let mut dy = [0.0; 4];
        for a in 0..4 {
            dx[a] = (j22 * dxi[a] - j12 * deta[a]) / det;
            dy[a] = (-j21 * dxi[a] + j11 * deta[a]) / det;
        }
        let (mut exx, mut eyy, mut gxy) = (0.0, 0.0, 0.0);
        let (mut p, mut px, mut py) = (0.0, 0.0, 0.0);
        for a in 0..4 {
            exx += dx[a] * u[2 * a];
            eyy += dy[a] * u[2 * a + 1];
            gxy += dy[a] * u[2 * a] + dx[a] * u[2 * a + 1];
            p += n[a] * phi[a];
            px += dx[a] * phi[a];
            py += dy[a] * phi[a];
        }
        let psi =
            0.5 * m.lambda * (exx + eyy).powi(2) + m.mu * (exx * exx + eyy * eyy + 0.5 * gxy * gxy);
        let g = (1.0 - p).powi(2) + m.k;
        let crack = m.gc * (p * p / (2.0 * m.l) + 0.5 * m.l * (px * px + py * py));
        total += det * (g * psi + crack);
    }
    total
}
