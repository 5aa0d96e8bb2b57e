// LAPACK symbols for ndarray-linalg come from the system OpenBLAS; the
// openblas-src build machinery is not usable in offline environments.
fn main() {
    println!("cargo:rustc-link-search=native=/usr/lib/x86_64-linux-gnu");
    println!("cargo:rustc-link-lib=dylib=openblas");
}
