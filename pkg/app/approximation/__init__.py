# q_hat, the F reparametrization and the approximate solution u_tilde
