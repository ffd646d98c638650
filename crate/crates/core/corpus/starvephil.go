package main

import "fmt"

func fork(f chan int) {
	for {
		f <- 1
		<-f
	}
}

func phil(left, right chan int, id int) {
	for {
		select {
		case <-left:
			select {
			case <-right:
				fmt.Println(id, "eats")
				left <- 1
				right <- 1
			}
		case <-right:
			select {
			case <-left:
				fmt.Println(id, "eats")
				right <- 1
				left <- 1
			}
		}
	}
}

func main() {
	fork1 := make(chan int)
	fork2 := make(chan int)
	fork3 := make(chan int)
	go fork(fork1)
	go fork(fork2)
	go fork(fork3)
	go phil(fork1, fork2, 0)
	go phil(fork2, fork3, 1)
	phil(fork3, fork1, 2)
}
