fn main() {
    for &(w, d) in &[(0.3, 0.3), (0.0, 0.3), (-0.25, 0.3), (0.08, 0.1), (0.9, 0.5)] {
        let closed = sshqfi::greens::ga0(w, 1.0, d).unwrap();
        for &nk in &[20_000usize, 100_000] {
            let ex = sshqfi::greens::ga0_quadrature_extrapolated(w, 1.0, d, &[1e-3, 1e-4, 1e-5], nk).unwrap();
            println!("w={w} d={d} nk={nk}: closed={closed:.12}, extrap={:.12} (err {:.3e}), im={:.3e}", ex.re, (ex.re-closed).abs(), ex.im);
        }
        for &eta in &[1e-3, 1e-4, 1e-5] {
            let g = sshqfi::greens::ga0_quadrature(w, 1.0, d, eta, 20_000).unwrap();
            println!("   eta={eta:.0e}: re={:.12} err={:.3e}", g.re, (g.re-closed).abs());
        }
    }
}
