use nalgebra::{DMatrix, DVector};
use phasefrac::fem::{
    element_residual_and_tangent, gauss_points, kinematics, ElementInput, ElementOrder,
    ElementOutputs, EnergySplit, HistoryMode, MaterialParams,
};
use phasefrac::mesh::{
    generate_structured_quad_mesh, BcTarget, DirichletSpec, Field, GridSpec, Mesh, NotchSpec,
    Prescribed, RefinementBand,
};
use phasefrac::system::{
    build_dof_map, Assembler, BlockFactor, DofMap, EvalOptions, Evaluation, HistorySource,
    IntegrationPointState,
};
use proptest::prelude::*;

fn params() -> MaterialParams {
    MaterialParams::new(100.0, 0.25, 1e-2, 0.5).unwrap()
}

fn four_elements(order: ElementOrder) -> Mesh {
    generate_structured_quad_mesh(&GridSpec::new(2.0, 2.0, 1.0).order(order)).unwrap()
}

fn clamp_bottom_pull_top() -> Vec<DirichletSpec> {
    vec![
        DirichletSpec::on_set(Field::Ux, "bottom", Prescribed::Constant(0.0)),
        DirichletSpec::on_set(Field::Uy, "bottom", Prescribed::Constant(0.0)),
        DirichletSpec::on_set(Field::Uy, "top", Prescribed::Ramp(0.02)),
    ]
}

fn evaluate(
    mesh: &Mesh,
    dofs: &DofMap,
    u: &[f64],
    phi: &[f64],
    h: &[f64],
    split: EnergySplit,
) -> Evaluation {
    let asm = Assembler::new(mesh, dofs);
    let ip = vec![IntegrationPointState::default(); h.len()];
    let opts = EvalOptions::residual(split, HistorySource::Given(h)).with_tangents(true, true);
    asm.evaluate(mesh, u, phi, &ip, &params(), &opts).unwrap()
}

fn sample_fields(mesh: &Mesh) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let nn = mesh.n_nodes();
    let u = (0..2 * nn).map(|i| 1e-2 * (0.7 * i as f64).sin()).collect();
    let phi = (0..nn)
        .map(|i| 0.3 + 0.2 * (1.3 * i as f64).cos())
        .collect();
    let h = (0..mesh.n_elements() * mesh.n_ip())
        .map(|q| 0.01 * (1 + q % 5) as f64)
        .collect();
    (u, phi, h)
}

#[test]
fn global_tangents_match_central_differences() {
    for order in [ElementOrder::Linear, ElementOrder::Quadratic] {
        for split in [EnergySplit::Isotropic, EnergySplit::Spectral] {
            let mesh = four_elements(order);
            let dofs = build_dof_map(&mesh, &clamp_bottom_pull_top()).unwrap();
            let (u, phi, h) = sample_fields(&mesh);
            let base = evaluate(&mesh, &dofs, &u, &phi, &h, split);
            let kuu = base.kuu.as_ref().unwrap();
            let kpp = base.kpp.as_ref().unwrap();

            let free_u: Vec<(usize, usize)> = dofs
                .u_equations()
                .iter()
                .enumerate()
                .filter_map(|(s, e)| e.map(|e| (s, e)))
                .collect();
            let scale = kuu
                .to_dense()
                .iter()
                .flatten()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            let step = 1e-7;
            for &(sj, ej) in &free_u {
                let mut up = u.clone();
                let mut um = u.clone();
                up[sj] += step;
                um[sj] -= step;
                let rp = evaluate(&mesh, &dofs, &up, &phi, &h, split).r_u;
                let rm = evaluate(&mesh, &dofs, &um, &phi, &h, split).r_u;
                for &(si, ei) in &free_u {
                    let fd = (rp[si] - rm[si]) / (2.0 * step);
                    assert!(
                        (kuu.get(ei, ej) - fd).abs() < 1e-6 * scale,
                        "{order:?} {split:?} K_uu({ei},{ej})"
                    );
                }
            }

            let free_p: Vec<(usize, usize)> = dofs
                .phi_equations()
                .iter()
                .enumerate()
                .filter_map(|(n, e)| e.map(|e| (n, e)))
                .collect();
            let scale = kpp
                .to_dense()
                .iter()
                .flatten()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            for &(nj, ej) in &free_p {
                let mut pp = phi.clone();
                let mut pm = phi.clone();
                pp[nj] += 1e-6;
                pm[nj] -= 1e-6;
                let rp = evaluate(&mesh, &dofs, &u, &pp, &h, split).r_phi;
                let rm = evaluate(&mesh, &dofs, &u, &pm, &h, split).r_phi;
                for &(ni, ei) in &free_p {
                    let fd = (rp[ni] - rm[ni]) / 2e-6;
                    assert!(
                        (kpp.get(ei, ej) - fd).abs() < 1e-6 * scale,
                        "{order:?} {split:?} K_pp({ei},{ej})"
                    );
                }
            }
        }
    }
}

#[test]
fn assembled_blocks_are_symmetric_and_uncoupled() {
    let mesh = generate_structured_quad_mesh(&GridSpec::new(3.0, 2.0, 0.5)).unwrap();
    let dofs = build_dof_map(&mesh, &clamp_bottom_pull_top()).unwrap();
    let (u, phi, h) = sample_fields(&mesh);
    let ev = evaluate(
        &mesh,
        &dofs,
        &u,
        &phi,
        &h,
        EnergySplit::VolumetricDeviatoric,
    );
    let (kuu, kpp) = (ev.kuu.unwrap(), ev.kpp.unwrap());
    assert!(kuu.asymmetry() <= 1e-14, "{:e}", kuu.asymmetry());
    assert!(kpp.asymmetry() <= 1e-14, "{:e}", kpp.asymmetry());
    // Each block is numbered within its own field only: there is no slot for
    // a displacement-phase entry.
    assert_eq!(kuu.n(), dofs.n_u());
    assert_eq!(kpp.n(), dofs.n_phi());
    for k in [&kuu, &kpp] {
        let p = &k.pattern;
        for i in 0..p.n {
            for &j in p.row(i) {
                assert!(
                    p.position(j, i).is_some(),
                    "pattern not structurally symmetric at ({i},{j})"
                );
            }
        }
    }
}

fn dense_block(mesh: &Mesh, phi: &[f64], h: &[f64], field_u: bool) -> DMatrix<f64> {
    let p = params();
    let nn = mesh.n_nodes();
    let n = if field_u { 2 * nn } else { nn };
    let mut k = DMatrix::zeros(n, n);
    let n_ip = mesh.n_ip();
    for (e, el) in mesh.elements.iter().enumerate() {
        let coords = mesh.element_coords(e);
        let u_e = vec![0.0; 2 * el.len()];
        let phi_e: Vec<f64> = el.iter().map(|&a| phi[a]).collect();
        let input = ElementInput {
            order: mesh.order,
            coords: &coords,
            u: &u_e,
            phi: &phi_e,
            history: HistoryMode::Fixed(&h[e * n_ip..(e + 1) * n_ip]),
            fatigue: None,
            inertia: None,
            thickness: mesh.thickness,
        };
        let c =
            element_residual_and_tangent(&input, &p, EnergySplit::Isotropic, ElementOutputs::ALL)
                .unwrap();
        if field_u {
            let ke = c.k_uu_dense();
            for (a, &na) in el.iter().enumerate() {
                for (b, &nb) in el.iter().enumerate() {
                    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                        k[(2 * na + i, 2 * nb + j)] += ke[2 * a + i][2 * b + j];
                    }
                }
            }
        } else {
            let ke = c.k_pp_dense();
            for (a, &na) in el.iter().enumerate() {
                for (b, &nb) in el.iter().enumerate() {
                    k[(na, nb)] += ke[a][b];
                }
            }
        }
    }
    k
}

/// Solves `K x = f` with Dirichlet values enforced by a stiff penalty.
fn penalty_solve(mut k: DMatrix<f64>, mut f: DVector<f64>, fixed: &[(usize, f64)]) -> DVector<f64> {
    let beta = 1e12 * k.diagonal().amax();
    for &(i, v) in fixed {
        k[(i, i)] += beta;
        f[i] += beta * v;
    }
    k.lu().solve(&f).unwrap()
}

#[test]
fn constraint_elimination_matches_penalty_oracle() {
    let mesh = four_elements(ElementOrder::Linear);
    let mut specs = clamp_bottom_pull_top();
    specs.push(DirichletSpec {
        field: Field::Phase,
        target: BcTarget::Nodes(vec![4]),
        value: Prescribed::Constant(1.0),
    });
    let dofs = build_dof_map(&mesh, &specs).unwrap();
    let nn = mesh.n_nodes();
    let mut u = vec![0.0; 2 * nn];
    let mut phi = vec![0.0; nn];
    dofs.apply_prescribed(&mut u, &mut phi, 1.0);
    let h: Vec<f64> = (0..mesh.n_elements() * 4)
        .map(|q| 0.02 + 0.01 * q as f64)
        .collect();

    // The displacement problem at phi = 0 and the phase problem at fixed H
    // are both linear, so one eliminated solve from the lifted state is exact.
    let asm = Assembler::new(&mesh, &dofs);
    let zero_phi = vec![0.0; nn];
    let ev = evaluate(&mesh, &dofs, &u, &zero_phi, &h, EnergySplit::Isotropic);
    let f = BlockFactor::new(Some((asm.u_symbolic(), ev.kuu.as_ref().unwrap())), None).unwrap();
    let rhs: Vec<f64> = (0..dofs.n_u())
        .map(|eq| {
            let slot = dofs
                .u_equations()
                .iter()
                .position(|e| *e == Some(eq))
                .unwrap();
            -ev.r_u[slot]
        })
        .collect();
    let du = f.solve_u(&rhs);
    let mut u_elim = u.clone();
    for (slot, eq) in dofs.u_equations().iter().enumerate() {
        if let Some(eq) = eq {
            u_elim[slot] += du[*eq];
        }
    }
    let fixed: Vec<(usize, f64)> = dofs
        .constraints()
        .iter()
        .filter(|c| c.field != Field::Phase)
        .map(|c| (c.slot(), c.value.at(1.0)))
        .collect();
    let u_pen = penalty_solve(
        dense_block(&mesh, &zero_phi, &h, true),
        DVector::zeros(2 * nn),
        &fixed,
    );
    let umax = u_pen.amax();
    for i in 0..2 * nn {
        assert!(
            (u_elim[i] - u_pen[i]).abs() <= 1e-8 * umax,
            "u[{i}]: {} vs {}",
            u_elim[i],
            u_pen[i]
        );
    }

    let ev = evaluate(&mesh, &dofs, &u, &phi, &h, EnergySplit::Isotropic);
    let f = BlockFactor::new(None, Some((asm.phi_symbolic(), ev.kpp.as_ref().unwrap()))).unwrap();
    let rhs: Vec<f64> = (0..dofs.n_phi())
        .map(|eq| {
            -ev.r_phi[dofs
                .phi_equations()
                .iter()
                .position(|e| *e == Some(eq))
                .unwrap()]
        })
        .collect();
    let dp = f.solve_phi(&rhs);
    let mut phi_elim = phi.clone();
    for (node, eq) in dofs.phi_equations().iter().enumerate() {
        if let Some(eq) = eq {
            phi_elim[node] += dp[*eq];
        }
    }
    // load vector of the phase problem: int 2 N H
    let zero = vec![0.0; nn];
    let r0 = evaluate(
        &mesh,
        &build_dof_map(&mesh, &[]).unwrap(),
        &vec![0.0; 2 * nn],
        &zero,
        &h,
        EnergySplit::Isotropic,
    )
    .r_phi;
    let load = DVector::from_iterator(nn, r0.iter().map(|r| -r));
    let phi_pen = penalty_solve(dense_block(&mesh, &zero, &h, false), load, &[(4, 1.0)]);
    for i in 0..nn {
        assert!(
            (phi_elim[i] - phi_pen[i]).abs() <= 1e-8,
            "phi[{i}]: {} vs {}",
            phi_elim[i],
            phi_pen[i]
        );
    }
}

#[test]
fn notch_faces_do_not_couple() {
    let mesh = generate_structured_quad_mesh(
        &GridSpec::new(1.0, 1.0, 0.125).notch(NotchSpec::duplicated([0.0, 0.5], [0.5, 0.5])),
    )
    .unwrap();
    let dofs = build_dof_map(
        &mesh,
        &[DirichletSpec::on_set(
            Field::Uy,
            "bottom",
            Prescribed::Constant(0.0),
        )],
    )
    .unwrap();
    let (u, phi, h) = sample_fields(&mesh);
    let ev = evaluate(&mesh, &dofs, &u, &phi, &h, EnergySplit::Isotropic);
    let kpp = ev.kpp.unwrap();
    let lower = &mesh.node_sets["notch_lower"];
    let upper = &mesh.node_sets["notch_upper"];
    assert_eq!(lower.len(), upper.len());
    for &a in lower {
        for &b in upper {
            if a == b {
                continue;
            }
            let (ea, eb) = (dofs.phi_eq(a).unwrap(), dofs.phi_eq(b).unwrap());
            assert_eq!(kpp.get(ea, eb), 0.0, "faces at nodes {a} and {b} couple");
        }
    }
}

proptest! {
    #[test]
    fn generated_meshes_have_positive_jacobians(
        w in 0.5f64..3.0, h in 0.5f64..3.0, div in 3usize..12, quadratic in any::<bool>(),
        notch_frac in 0.1f64..0.8, band in any::<bool>(),
    ) {
        let he = w.min(h) / div as f64;
        let mut spec = GridSpec::new(w, h, he)
            .notch(NotchSpec::duplicated([0.0, 0.5 * h], [notch_frac * w, 0.5 * h]));
        if quadratic {
            spec = spec.order(ElementOrder::Quadratic);
        }
        if band {
            spec = spec.band(RefinementBand { x_min: 0.4 * w, x_max: w, y_min: 0.4 * h, y_max: 0.6 * h, he: he / 3.0 });
        }
        let mesh = generate_structured_quad_mesh(&spec).unwrap();
        prop_assert!(mesh.validate().is_ok());
        for e in 0..mesh.n_elements() {
            let coords = mesh.element_coords(e);
            for gp in gauss_points(mesh.order) {
                let k = kinematics(mesh.order, &coords, gp.xi, gp.eta, &[]).unwrap();
                prop_assert!(k.det_j > 0.0);
            }
        }
        for set in mesh.node_sets.values() {
            prop_assert!(set.iter().all(|&n| n < mesh.n_nodes()));
        }
    }

    #[test]
    fn equation_numbers_are_dense_and_skip_constraints(
        picks in prop::collection::vec((0usize..25, 0usize..3), 0..30),
    ) {
        let mesh = generate_structured_quad_mesh(&GridSpec::new(1.0, 1.0, 0.25)).unwrap();
        let specs: Vec<DirichletSpec> = picks
            .iter()
            .map(|&(node, f)| {
                let (field, value) = match f {
                    0 => (Field::Ux, Prescribed::Constant(0.0)),
                    1 => (Field::Uy, Prescribed::Constant(0.0)),
                    _ => (Field::Phase, Prescribed::Constant(1.0)),
                };
                DirichletSpec { field, target: BcTarget::Nodes(vec![node]), value }
            })
            .collect();
        let dofs = build_dof_map(&mesh, &specs).unwrap();
        let mut seen: Vec<usize> = dofs.u_equations().iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..dofs.n_u()).collect::<Vec<_>>());
        let mut seen: Vec<usize> = dofs.phi_equations().iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..dofs.n_phi()).collect::<Vec<_>>());
        for c in dofs.constraints() {
            match c.field {
                Field::Phase => prop_assert!(dofs.phi_eq(c.node).is_none()),
                _ => prop_assert!(dofs.u_eq(c.slot()).is_none()),
            }
        }
        prop_assert_eq!(dofs.n_unknowns() + dofs.constraints().len(), dofs.n_total());
    }
}
