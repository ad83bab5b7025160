use std::process::Command;

fn main() {
    let hash = Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .filter(|s| !s.is_empty());
    let version = match hash {
        Some(h) => format!("v{}-{}", env!("CARGO_PKG_VERSION"), h),
        None => format!("v{}-untracked", env!("CARGO_PKG_VERSION")),
    };
    println!("cargo:rustc-env=SELBERG_LAB_VERSION={version}");
    println!("cargo:rerun-if-changed=../../.git/HEAD");
}
