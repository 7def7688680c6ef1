pub mod csp_ref;
